#pragma once

// Binary serialization of tensor trains and TT operators.
//
// Tensor file ("TTC1"): magic, then little-endian u64 header {order M, mode
// sizes n_1..n_M, ranks r_0..r_M}, then the blocks as f64 in row-major
// (s_{k-1}, a_k, s_k) order, block 1 first.
// Operator file ("TTO1"): magic, u64 header {order M, row sizes, col sizes,
// ranks r_0..r_M}, then f64 blocks in row-major (s_{k-1}, i_k, j_k, s_k).

#include "ttchaos/tt_operator.hpp"
#include "ttchaos/tt_tensor.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttchaos {

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw std::runtime_error("tt_io: truncated header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

inline void put_f64(std::ostream& os, const double* p, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, p + i, 8);
    put_u64(os, bits);
  }
}

inline void get_f64(std::istream& is, double* p, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t bits = get_u64(is);
    std::memcpy(p + i, &bits, 8);
  }
}

inline void check_magic(std::istream& is, const char expect[4], const char* what) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, expect, 4) != 0)
    throw std::runtime_error(std::string(what) + ": bad magic, not a recognized file");
}

}  // namespace detail

inline void write_tt(std::ostream& os, const TTTensor& u) {
  os.write("TTC1", 4);
  const auto modes = u.mode_sizes();
  const auto ranks = u.ranks();
  detail::put_u64(os, static_cast<std::uint64_t>(u.order()));
  for (int n : modes) detail::put_u64(os, static_cast<std::uint64_t>(n));
  for (int r : ranks) detail::put_u64(os, static_cast<std::uint64_t>(r));
  for (int k = 0; k < u.order(); ++k)
    detail::put_f64(os, u.block(k).data(), u.block(k).size());
  if (!os) throw std::runtime_error("write_tt: stream failure");
}

inline TTTensor read_tt(std::istream& is) {
  detail::check_magic(is, "TTC1", "read_tt");
  const auto M = static_cast<int>(detail::get_u64(is));
  if (M < 1 || M > 1'000'000) throw std::runtime_error("read_tt: implausible order");
  std::vector<int> modes(M);
  for (int& n : modes) n = static_cast<int>(detail::get_u64(is));
  std::vector<int> ranks(M + 1);
  for (int& r : ranks) r = static_cast<int>(detail::get_u64(is));
  std::vector<Tensor3> blocks;
  for (int k = 0; k < M; ++k) {
    if (modes[k] < 1 || ranks[k] < 1 || ranks[k + 1] < 1)
      throw std::runtime_error("read_tt: invalid dimensions in header");
    Tensor3 b(ranks[k], modes[k], ranks[k + 1]);
    detail::get_f64(is, b.data(), b.size());
    blocks.push_back(std::move(b));
  }
  if (!is) throw std::runtime_error("read_tt: truncated payload");
  return TTTensor(std::move(blocks));  // constructor re-validates the chain
}

inline void write_tt_operator(std::ostream& os, const TTOperator& A) {
  os.write("TTO1", 4);
  detail::put_u64(os, static_cast<std::uint64_t>(A.order()));
  for (int n : A.row_sizes()) detail::put_u64(os, static_cast<std::uint64_t>(n));
  for (int n : A.col_sizes()) detail::put_u64(os, static_cast<std::uint64_t>(n));
  for (int r : A.ranks()) detail::put_u64(os, static_cast<std::uint64_t>(r));
  for (int k = 0; k < A.order(); ++k)
    detail::put_f64(os, A.block(k).data(), A.block(k).size());
  if (!os) throw std::runtime_error("write_tt_operator: stream failure");
}

inline TTOperator read_tt_operator(std::istream& is) {
  detail::check_magic(is, "TTO1", "read_tt_operator");
  const auto M = static_cast<int>(detail::get_u64(is));
  if (M < 1 || M > 1'000'000) throw std::runtime_error("read_tt_operator: implausible order");
  std::vector<int> rows(M), cols(M), ranks(M + 1);
  for (int& n : rows) n = static_cast<int>(detail::get_u64(is));
  for (int& n : cols) n = static_cast<int>(detail::get_u64(is));
  for (int& r : ranks) r = static_cast<int>(detail::get_u64(is));
  std::vector<Tensor4> blocks;
  for (int k = 0; k < M; ++k) {
    if (rows[k] < 1 || cols[k] < 1 || ranks[k] < 1 || ranks[k + 1] < 1)
      throw std::runtime_error("read_tt_operator: invalid dimensions in header");
    Tensor4 b(ranks[k], rows[k], cols[k], ranks[k + 1]);
    detail::get_f64(is, b.data(), b.size());
    blocks.push_back(std::move(b));
  }
  if (!is) throw std::runtime_error("read_tt_operator: truncated payload");
  return TTOperator(std::move(blocks));
}

inline void save_tt(const std::string& path, const TTTensor& u) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_tt: cannot open " + path);
  write_tt(os, u);
}

inline TTTensor load_tt(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_tt: cannot open " + path);
  return read_tt(is);
}

inline void save_tt_operator(const std::string& path, const TTOperator& A) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_tt_operator: cannot open " + path);
  write_tt_operator(os, A);
}

inline TTOperator load_tt_operator(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_tt_operator: cannot open " + path);
  return read_tt_operator(is);
}

}  // namespace ttchaos
