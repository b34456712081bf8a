#include "admot/probe.hpp"

#include <ostream>
#include <stdexcept>
#include <utility>

#include "admot/rng.hpp"

namespace admot {

namespace {

constexpr std::uint64_t kProbeDomainTag = 0x70726F6265u;  // stream domain id

inline std::int8_t symbol_from_bits(std::uint32_t two_bits, Alphabet alphabet) {
  if (alphabet == Alphabet::kRademacher) {
    return (two_bits & 1u) ? std::int8_t{1} : std::int8_t{-1};
  }
  // {00,01} -> 0, {10} -> -1, {11} -> +1
  switch (two_bits & 3u) {
    case 2u:
      return -1;
    case 3u:
      return 1;
    default:
      return 0;
  }
}

// Entry r of a column stream: 64 two-bit symbols per 128-bit block.
inline std::int8_t column_entry(const rng::Stream& col_stream, Eigen::Index r,
                                Alphabet alphabet) {
  const auto block = col_stream.block(std::uint64_t(r) >> 6);
  const unsigned lane = unsigned(r) & 63u;
  const unsigned bit = 2u * lane;
  const std::uint64_t word = bit < 64 ? block.lo >> bit : block.hi >> (bit - 64);
  return symbol_from_bits(std::uint32_t(word) & 3u, alphabet);
}

inline rng::Stream column_stream(std::uint64_t seed, Eigen::Index col) {
  return rng::Stream(rng::mix64(seed, kProbeDomainTag))
      .substream(std::uint64_t(col));
}

}  // namespace

std::string to_string(Alphabet alphabet) {
  return alphabet == Alphabet::kRademacher ? "rademacher" : "ternary";
}

Alphabet alphabet_from_string(const std::string& name) {
  if (name == "rademacher") return Alphabet::kRademacher;
  if (name == "ternary") return Alphabet::kTernary;
  throw std::invalid_argument("unknown probe alphabet: " + name);
}

ProbeMatrix::ProbeMatrix(std::uint64_t seed, Alphabet alphabet,
                         EntryMatrix entries)
    : seed_(seed), alphabet_(alphabet), entries_(std::move(entries)) {}

ProbeMatrix ProbeMatrix::generate(std::uint64_t seed, Eigen::Index rows,
                                  Eigen::Index cols, Alphabet alphabet) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("probe matrix dimensions must be positive");
  }
  EntryMatrix entries(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const rng::Stream stream = column_stream(seed, c);
    for (Eigen::Index r = 0; r < rows; ++r) {
      entries(r, c) = column_entry(stream, r, alphabet);
    }
  }
  return ProbeMatrix(seed, alphabet, std::move(entries));
}

Eigen::VectorXd ProbeMatrix::derive_column(std::uint64_t seed,
                                           Eigen::Index rows, Eigen::Index col,
                                           Alphabet alphabet) {
  if (rows < 1) throw std::invalid_argument("column length must be positive");
  if (col < 0) throw std::out_of_range("column index out of range");
  const rng::Stream stream = column_stream(seed, col);
  Eigen::VectorXd v(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    v(r) = double(column_entry(stream, r, alphabet));
  }
  return v;
}

Eigen::MatrixXd ProbeMatrix::row_slice(Eigen::Index m) const {
  if (m < 1 || m > rows()) {
    throw std::out_of_range("row slice exceeds probe matrix capacity");
  }
  return entries_.topRows(m).cast<double>();
}

Eigen::VectorXd ProbeMatrix::column(Eigen::Index i) const {
  if (i < 0 || i >= cols()) {
    throw std::out_of_range("probe column index out of range");
  }
  return entries_.col(i).cast<double>();
}

void ProbeMatrix::write_csv(std::ostream& os) const {
  os << "# seed=" << seed_ << " alphabet=" << to_string(alphabet_)
     << " rows=" << rows() << " cols=" << cols()
     << " generator=philox4x32-10\n";
  for (Eigen::Index r = 0; r < rows(); ++r) {
    for (Eigen::Index c = 0; c < cols(); ++c) {
      if (c) os << ',';
      os << int(entries_(r, c));
    }
    os << '\n';
  }
}

}  // namespace admot
