#include "thermoflow/sft.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace thermoflow::sft {

TransitionMatrix::TransitionMatrix(const std::vector<std::vector<int>>& rows) {
  k_ = static_cast<int>(rows.size());
  if (k_ == 0) throw Error("transition matrix is empty");
  a_.assign(static_cast<size_t>(k_) * k_, 0);
  for (int i = 0; i < k_; ++i) {
    if (static_cast<int>(rows[i].size()) != k_)
      throw Error("transition matrix is not square");
    for (int j = 0; j < k_; ++j) {
      int v = rows[i][j];
      if (v != 0 && v != 1) throw Error("transition matrix entries must be 0 or 1");
      a_[i * k_ + j] = static_cast<uint8_t>(v);
    }
  }
  succ_.assign(k_, {});
  pred_.assign(k_, {});
  for (int cur = 0; cur < k_; ++cur)
    for (int next = 0; next < k_; ++next)
      if (allows(next, cur)) {
        succ_[cur].push_back(next);
        pred_[next].push_back(cur);
      }
  for (int i = 0; i < k_; ++i) {
    if (pred_[i].empty())
      throw Error("row " + std::to_string(i + 1) + " has no 1 (dead symbol)");
    if (succ_[i].empty())
      throw Error("column " + std::to_string(i + 1) + " has no 1 (dead symbol)");
  }
}

std::vector<std::vector<int>> TransitionMatrix::rows() const {
  std::vector<std::vector<int>> r(k_, std::vector<int>(k_));
  for (int i = 0; i < k_; ++i)
    for (int j = 0; j < k_; ++j) r[i][j] = a_[i * k_ + j];
  return r;
}

TransitionMatrix full_shift(int k) {
  return TransitionMatrix(std::vector<std::vector<int>>(k, std::vector<int>(k, 1)));
}

TransitionMatrix golden_mean() { return TransitionMatrix({{1, 1}, {1, 0}}); }

std::optional<int> is_mixing(const TransitionMatrix& a, int max_power) {
  const int k = a.size();
  std::vector<uint8_t> p(static_cast<size_t>(k) * k), next(p.size());
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) p[i * k + j] = static_cast<uint8_t>(a.entry(i, j));
  for (int m = 1; m <= max_power; ++m) {
    bool positive = true;
    for (uint8_t v : p)
      if (!v) {
        positive = false;
        break;
      }
    if (positive) return m;
    // next = p * a, boolean
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        uint8_t v = 0;
        for (int l = 0; l < k && !v; ++l) v = p[i * k + l] && a.entry(l, j);
        next[i * k + j] = v;
      }
    p.swap(next);
  }
  return std::nullopt;
}

int wielandt_bound(const TransitionMatrix& a) {
  int k = a.size();
  return (k - 1) * (k - 1) + 1;
}

bool admissible(const TransitionMatrix& a, const Word& w) {
  for (int s : w)
    if (s < 0 || s >= a.size()) return false;
  for (size_t t = 0; t + 1 < w.size(); ++t)
    if (!a.allows(w[t + 1], w[t])) return false;
  return true;
}

std::vector<bool> extendable_symbols(const TransitionMatrix& a) {
  const int k = a.size();
  std::vector<bool> alive(k, true);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int s = 0; s < k; ++s) {
      if (!alive[s]) continue;
      bool any = false;
      for (int n : a.successors(s))
        if (alive[n]) {
          any = true;
          break;
        }
      if (!any) {
        alive[s] = false;
        changed = true;
      }
    }
  }
  return alive;
}

std::vector<Word> enumerate_words(const TransitionMatrix& a, int m) {
  if (m <= 0) throw Error("enumerate_words: depth must be at least 1");
  const auto alive = extendable_symbols(a);
  std::vector<Word> out;
  Word w(m);
  // iterative depth-first search; successor lists are ascending so the
  // output is lexicographic
  std::vector<size_t> pos(m, 0);
  std::vector<const std::vector<int>*> choices(m);
  std::vector<int> roots;
  for (int s = 0; s < a.size(); ++s)
    if (alive[s]) roots.push_back(s);
  choices[0] = &roots;
  int d = 0;
  pos[0] = 0;
  while (d >= 0) {
    const auto& c = *choices[d];
    while (pos[d] < c.size() && !alive[c[pos[d]]]) ++pos[d];
    if (pos[d] >= c.size()) {
      --d;
      if (d >= 0) ++pos[d];
      continue;
    }
    w[d] = c[pos[d]];
    if (d + 1 == m) {
      out.push_back(w);
      ++pos[d];
      continue;
    }
    choices[d + 1] = &a.successors(w[d]);
    pos[d + 1] = 0;
    ++d;
  }
  return out;
}

Word shift(const Word& w) {
  if (w.size() < 2) throw Error("shift: word must have length at least 2");
  return Word(w.begin() + 1, w.end());
}

Distance d_sigma(const Word& x, const Word& y) {
  size_t n = std::min(x.size(), y.size());
  for (size_t m = 0; m < n; ++m)
    if (x[m] != y[m]) {
      double v = std::exp(-static_cast<double>(m));
      return {v, true, v};
    }
  return {0.0, false, std::exp(-static_cast<double>(n))};
}

WordIndex::WordIndex(const TransitionMatrix& a, int depth) : depth_(depth), base_(a.size()) {
  double bits = depth * std::log2(static_cast<double>(base_));
  if (bits >= 63.0) throw Error("WordIndex: alphabet^depth exceeds 64-bit encoding");
  words_ = enumerate_words(a, depth);
  lookup_.reserve(words_.size() * 2);
  for (int i = 0; i < size(); ++i) lookup_.emplace(encode(words_[i].data()), i);
}

uint64_t WordIndex::encode(const int* first) const {
  uint64_t c = 0;
  for (int t = 0; t < depth_; ++t) c = c * static_cast<uint64_t>(base_) + static_cast<uint64_t>(first[t]);
  return c;
}

int WordIndex::find(const int* first) const {
  for (int t = 0; t < depth_; ++t)
    if (first[t] < 0 || first[t] >= base_) return -1;
  auto it = lookup_.find(encode(first));
  return it == lookup_.end() ? -1 : it->second;
}

int WordIndex::find(const Word& w) const {
  if (static_cast<int>(w.size()) != depth_) return -1;
  return find(w.data());
}

TransitionMatrix read_matrix(std::istream& in) {
  int k = 0;
  if (!(in >> k) || k <= 0) throw Error("matrix file: expected positive size on first line");
  std::vector<std::vector<int>> rows(k, std::vector<int>(k));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (!(in >> rows[i][j])) throw Error("matrix file: truncated row " + std::to_string(i + 1));
  return TransitionMatrix(rows);
}

void write_matrix(std::ostream& out, const TransitionMatrix& a) {
  out << a.size() << '\n';
  for (int i = 0; i < a.size(); ++i) {
    for (int j = 0; j < a.size(); ++j) out << (j ? " " : "") << a.entry(i, j);
    out << '\n';
  }
}

std::string format_word(const Word& w) {
  std::string s;
  for (size_t i = 0; i < w.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(w[i] + 1);
  }
  return s;
}

Word parse_word(const std::string& s) {
  Word w;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    size_t used = 0;
    int v = std::stoi(tok, &used);
    if (v < 1) throw Error("word symbols are 1-based: " + tok);
    w.push_back(v - 1);
  }
  return w;
}

void write_words_csv(std::ostream& out, const std::vector<Word>& words) {
  for (const auto& w : words) out << format_word(w) << '\n';
}

std::vector<Word> read_words_csv(std::istream& in) {
  std::vector<Word> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_word(line));
  }
  return out;
}

}  // namespace thermoflow::sft
