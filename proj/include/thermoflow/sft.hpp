#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace thermoflow::sft {

// Symbols are 0-based in memory and 1-based in every file format.
using Word = std::vector<int>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Transition convention: a(next, cur) == 1 permits "current cur, next next",
// i.e. a word w is admissible iff a(w[t+1], w[t]) == 1 for all t.
class TransitionMatrix {
 public:
  TransitionMatrix() = default;
  explicit TransitionMatrix(const std::vector<std::vector<int>>& rows);

  int size() const { return k_; }
  bool allows(int next, int cur) const { return a_[next * k_ + cur] != 0; }
  int entry(int i, int j) const { return a_[i * k_ + j]; }
  std::vector<std::vector<int>> rows() const;

  // Symbols reachable in one step from cur, ascending.
  const std::vector<int>& successors(int cur) const { return succ_[cur]; }
  // Symbols that can precede next, ascending.
  const std::vector<int>& predecessors(int next) const { return pred_[next]; }

 private:
  int k_ = 0;
  std::vector<uint8_t> a_;
  std::vector<std::vector<int>> succ_;
  std::vector<std::vector<int>> pred_;
};

TransitionMatrix full_shift(int k);
TransitionMatrix golden_mean();

std::optional<int> is_mixing(const TransitionMatrix& a, int max_power);
// Wielandt bound (k-1)^2+1 on the primitivity exponent.
int wielandt_bound(const TransitionMatrix& a);

bool admissible(const TransitionMatrix& a, const Word& w);

// Symbols from which an infinite admissible forward path exists.
std::vector<bool> extendable_symbols(const TransitionMatrix& a);

std::vector<Word> enumerate_words(const TransitionMatrix& a, int m);

Word shift(const Word& w);

struct Distance {
  double value = 0.0;
  // False when the truncations agree on their common range; value is then 0
  // and bound = exp(-common length) is the best available upper bound.
  bool exact = true;
  double bound = 0.0;
};
Distance d_sigma(const Word& x, const Word& y);

// Dense index of all extendable admissible words of one fixed length, in
// lexicographic order (the order of enumerate_words).
class WordIndex {
 public:
  WordIndex() = default;
  WordIndex(const TransitionMatrix& a, int depth);

  int depth() const { return depth_; }
  int size() const { return static_cast<int>(words_.size()); }
  const Word& word(int i) const { return words_[i]; }
  const std::vector<Word>& words() const { return words_; }
  // -1 when w is not an extendable admissible word of this depth.
  int find(const Word& w) const;
  int find(const int* first) const;

 private:
  uint64_t encode(const int* first) const;
  int depth_ = 0;
  int base_ = 0;
  std::vector<Word> words_;
  std::unordered_map<uint64_t, int> lookup_;
};

TransitionMatrix read_matrix(std::istream& in);
void write_matrix(std::ostream& out, const TransitionMatrix& a);
void write_words_csv(std::ostream& out, const std::vector<Word>& words);
std::vector<Word> read_words_csv(std::istream& in);
std::string format_word(const Word& w);
Word parse_word(const std::string& s);

}  // namespace thermoflow::sft
