#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include <Eigen/Core>

namespace admot {

enum class Alphabet {
  kRademacher,  // entries in {-1,+1}, equal probability
  kTernary,     // entries in {0,-1,+1}, probabilities {1/2,1/4,1/4}
};

std::string to_string(Alphabet alphabet);
Alphabet alphabet_from_string(const std::string& name);

// Training matrix shared by every node.  Entries come from a keyed
// counter-mode PRNG (Philox-4x32-10, 2 bits per entry) where the stream for
// column i is keyed by (seed, i): any transmitter can materialize its own
// column without generating the rest, and regenerating with identical
// (seed, rows, cols, alphabet) is bit-identical.
class ProbeMatrix {
 public:
  using EntryMatrix =
      Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;

  static ProbeMatrix generate(std::uint64_t seed, Eigen::Index rows,
                              Eigen::Index cols, Alphabet alphabet);

  // Column derivation without touching any other column.
  static Eigen::VectorXd derive_column(std::uint64_t seed, Eigen::Index rows,
                                       Eigen::Index col, Alphabet alphabet);

  Eigen::Index rows() const { return entries_.rows(); }
  Eigen::Index cols() const { return entries_.cols(); }
  Alphabet alphabet() const { return alphabet_; }
  std::uint64_t seed() const { return seed_; }
  const EntryMatrix& entries() const { return entries_; }

  // First m rows, widened to double for use as a sensing matrix.
  Eigen::MatrixXd row_slice(Eigen::Index m) const;

  Eigen::VectorXd column(Eigen::Index i) const;

  // Debug export: one metadata line, then the integer entries.
  void write_csv(std::ostream& os) const;

 private:
  ProbeMatrix(std::uint64_t seed, Alphabet alphabet, EntryMatrix entries);

  std::uint64_t seed_ = 0;
  Alphabet alphabet_ = Alphabet::kRademacher;
  EntryMatrix entries_;
};

}  // namespace admot
