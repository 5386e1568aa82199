#pragma once

// SCTN tensor files.
//
//   offset 0  magic "SCTN" (0x53 0x43 0x54 0x4E)
//          4  u8 version = 1
//          5  u8 dtype: 1 f32, 2 f64, 3 complex64, 4 complex128 (re, im interleaved)
//          6  u8 ndim
//          7  u8 pad = 0
//          8  ndim x u64 dims, little-endian
//          .  row-major little-endian payload
//
// Files are written to a temporary sibling and renamed into place.

#include <array>
#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "mscat/errors.hpp"

namespace mscat {

enum class DType : std::uint8_t { kF32 = 1, kF64 = 2, kComplex64 = 3, kComplex128 = 4 };

inline std::size_t element_size(DType t) {
  switch (t) {
    case DType::kF32: return 4;
    case DType::kF64: return 8;
    case DType::kComplex64: return 8;
    case DType::kComplex128: return 16;
  }
  return 0;
}

inline bool is_complex(DType t) { return t == DType::kComplex64 || t == DType::kComplex128; }

inline constexpr std::array<unsigned char, 4> kTensorMagic{0x53, 0x43, 0x54, 0x4E};
inline constexpr std::uint8_t kTensorVersion = 1;
inline constexpr std::size_t kTensorHeaderBytes = 8;

/// Raw tensor: dtype, shape and little-endian payload bytes.
struct Tensor {
  DType dtype = DType::kF64;
  std::vector<std::uint64_t> dims;
  std::vector<unsigned char> payload;

  std::uint64_t count() const {
    std::uint64_t c = 1;
    for (auto d : dims) c *= d;
    return c;
  }
};

namespace detail {

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<unsigned char>(bits >> (8 * b)));
}

template <typename T>
T get_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) bits |= static_cast<U>(p[b]) << (8 * b);
  return std::bit_cast<T>(bits);
}

inline void check_count(std::span<const std::uint64_t> dims, std::size_t count) {
  std::uint64_t c = 1;
  for (auto d : dims) c *= d;
  if (c != count) {
    throw ValidationError("tensor dims describe " + std::to_string(c) + " elements but " + std::to_string(count) +
                          " were given");
  }
}

}  // namespace detail

inline Tensor make_tensor(std::span<const std::uint64_t> dims, std::span<const double> values) {
  detail::check_count(dims, values.size());
  Tensor t{DType::kF64, {dims.begin(), dims.end()}, {}};
  t.payload.reserve(values.size() * 8);
  for (double v : values) detail::put_le(t.payload, v);
  return t;
}

inline Tensor make_tensor(std::span<const std::uint64_t> dims, std::span<const std::complex<double>> values) {
  detail::check_count(dims, values.size());
  Tensor t{DType::kComplex128, {dims.begin(), dims.end()}, {}};
  t.payload.reserve(values.size() * 16);
  for (const auto& v : values) {
    detail::put_le(t.payload, v.real());
    detail::put_le(t.payload, v.imag());
  }
  return t;
}

/// Real payload widened to double. Throws ValidationError for complex tensors.
inline std::vector<double> real_values(const Tensor& t) {
  if (is_complex(t.dtype)) throw ValidationError("expected a real tensor, found a complex one");
  const std::size_t n = static_cast<std::size_t>(t.count());
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = t.dtype == DType::kF64 ? detail::get_le<double>(&t.payload[i * 8])
                                    : static_cast<double>(detail::get_le<float>(&t.payload[i * 4]));
  }
  return out;
}

inline std::vector<std::complex<double>> complex_values(const Tensor& t) {
  if (!is_complex(t.dtype)) throw ValidationError("expected a complex tensor, found a real one");
  const std::size_t n = static_cast<std::size_t>(t.count());
  std::vector<std::complex<double>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (t.dtype == DType::kComplex128) {
      out[i] = {detail::get_le<double>(&t.payload[i * 16]), detail::get_le<double>(&t.payload[i * 16 + 8])};
    } else {
      out[i] = {detail::get_le<float>(&t.payload[i * 8]), detail::get_le<float>(&t.payload[i * 8 + 4])};
    }
  }
  return out;
}

inline std::vector<unsigned char> encode_tensor(const Tensor& t) {
  if (t.dims.size() > 255) throw ValidationError("tensor rank above 255 is not representable");
  if (t.payload.size() != t.count() * element_size(t.dtype)) {
    throw ValidationError("tensor payload size does not match dims and dtype");
  }
  std::vector<unsigned char> out(kTensorMagic.begin(), kTensorMagic.end());
  out.push_back(kTensorVersion);
  out.push_back(static_cast<unsigned char>(t.dtype));
  out.push_back(static_cast<unsigned char>(t.dims.size()));
  out.push_back(0);
  for (auto d : t.dims) detail::put_le(out, d);
  out.insert(out.end(), t.payload.begin(), t.payload.end());
  return out;
}

inline Tensor decode_tensor(std::span<const unsigned char> bytes) {
  if (bytes.size() < kTensorHeaderBytes) throw FormatError("truncated SCTN header", bytes.size());
  if (!std::equal(kTensorMagic.begin(), kTensorMagic.end(), bytes.begin())) {
    throw FormatError("bad SCTN magic", 0);
  }
  if (bytes[4] != kTensorVersion) throw FormatError("unsupported SCTN version " + std::to_string(bytes[4]), 4);
  const std::uint8_t code = bytes[5];
  if (code < 1 || code > 4) throw FormatError("unknown SCTN dtype " + std::to_string(code), 5);
  const std::size_t ndim = bytes[6];
  if (bytes[7] != 0) throw FormatError("nonzero SCTN pad byte", 7);
  Tensor t;
  t.dtype = static_cast<DType>(code);
  const std::size_t dims_end = kTensorHeaderBytes + 8 * ndim;
  if (bytes.size() < dims_end) throw FormatError("truncated SCTN dims", bytes.size());
  t.dims.resize(ndim);
  long double approx = 1.0L;
  for (std::size_t d = 0; d < ndim; ++d) {
    t.dims[d] = detail::get_le<std::uint64_t>(&bytes[kTensorHeaderBytes + 8 * d]);
    approx *= static_cast<long double>(t.dims[d]);
  }
  const long double expected_payload = approx * element_size(t.dtype);
  const std::size_t available = bytes.size() - dims_end;
  if (expected_payload > static_cast<long double>(available)) {
    throw FormatError("truncated SCTN payload", bytes.size());
  }
  const auto payload = static_cast<std::size_t>(expected_payload);
  if (payload < available) throw FormatError("trailing bytes after SCTN payload", dims_end + payload);
  t.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(dims_end), bytes.end());
  return t;
}

/// Writes `bytes` to `path` through a temporary file and rename.
inline void write_file_atomic(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, {reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  write_file_atomic(path, encode_tensor(t));
}

inline Tensor read_tensor(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_tensor(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

}  // namespace mscat
