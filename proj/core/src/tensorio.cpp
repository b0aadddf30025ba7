#include "scim/tensorio.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace scim {
namespace {

constexpr std::array<char, 8> kMagic = {'S', 'C', 'I', 'M', 'T', 'N', 'S', 'R'};
constexpr std::uint8_t kVersion = 1;

template <typename T>
constexpr DType dtype_of() {
  if constexpr (std::is_same_v<T, float>) return DType::f32;
  if constexpr (std::is_same_v<T, std::uint16_t>) return DType::u16;
  if constexpr (std::is_same_v<T, std::int32_t>) return DType::i32;
  if constexpr (std::is_same_v<T, std::uint8_t>) return DType::u8;
}

template <typename U>
void put_le(std::vector<std::byte>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::byte>((value >> (8 * i)) & 0xFF));
  }
}

template <typename U>
U get_le(const std::byte* p) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(std::to_integer<std::uint8_t>(p[i])) << (8 * i);
  }
  return value;
}

template <typename T>
void put_element(std::vector<std::byte>& out, T value) {
  if constexpr (std::is_same_v<T, float>) {
    put_le(out, std::bit_cast<std::uint32_t>(value));
  } else if constexpr (std::is_same_v<T, std::int32_t>) {
    put_le(out, std::bit_cast<std::uint32_t>(value));
  } else {
    put_le(out, value);
  }
}

template <typename T>
T get_element(const std::byte* p) {
  if constexpr (std::is_same_v<T, float>) {
    return std::bit_cast<float>(get_le<std::uint32_t>(p));
  } else if constexpr (std::is_same_v<T, std::int32_t>) {
    return std::bit_cast<std::int32_t>(get_le<std::uint32_t>(p));
  } else {
    return get_le<T>(p);
  }
}

template <typename T>
std::vector<T> decode_payload(const std::byte* p, std::uint64_t count) {
  std::vector<T> values(count);
  for (std::uint64_t i = 0; i < count; ++i) values[i] = get_element<T>(p + i * sizeof(T));
  return values;
}

std::uint64_t product(const std::vector<std::uint64_t>& dims) {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

}  // namespace

std::string_view dtype_name(DType dtype) {
  switch (dtype) {
    case DType::f32: return "f32";
    case DType::u16: return "u16";
    case DType::i32: return "i32";
    case DType::u8: return "u8";
  }
  return "?";
}

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::f32: return 4;
    case DType::u16: return 2;
    case DType::i32: return 4;
    case DType::u8: return 1;
  }
  return 0;
}

Tensor::Tensor(std::vector<std::uint64_t> dims, Storage payload)
    : dims_(std::move(dims)), payload_(std::move(payload)) {
  if (dims_.size() > 255) {
    throw TensorError(TensorError::Kind::shape_mismatch, "tensor rank exceeds 255");
  }
  const std::size_t len = std::visit([](const auto& v) { return v.size(); }, payload_);
  if (len != product(dims_)) {
    throw TensorError(TensorError::Kind::shape_mismatch,
                      "payload length " + std::to_string(len) + " does not match dims product " +
                          std::to_string(product(dims_)));
  }
}

DType Tensor::dtype() const {
  return std::visit([](const auto& v) { return dtype_of<typename std::decay_t<decltype(v)>::value_type>(); },
                    payload_);
}

std::uint64_t Tensor::element_count() const { return product(dims_); }

std::vector<std::byte> encode_tensor(const Tensor& tensor) {
  std::vector<std::byte> out;
  out.reserve(kTensorHeaderSize + 8 * tensor.ndim() + tensor.element_count() * dtype_size(tensor.dtype()));
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  out.push_back(static_cast<std::byte>(kVersion));
  out.push_back(static_cast<std::byte>(tensor.dtype()));
  out.push_back(static_cast<std::byte>(tensor.ndim()));
  for (int i = 0; i < 5; ++i) out.push_back(std::byte{0});
  for (auto d : tensor.dims()) put_le<std::uint64_t>(out, d);
  std::visit(
      [&](const auto& values) {
        for (auto v : values) put_element(out, v);
      },
      tensor.storage());
  return out;
}

Tensor decode_tensor(std::span<const std::byte> bytes, const std::string& origin) {
  using Kind = TensorError::Kind;
  if (bytes.size() < kMagic.size() ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw TensorError(Kind::bad_magic, origin + ": not a tensor file (bad magic)");
  }
  if (bytes.size() < kTensorHeaderSize) {
    throw TensorError(Kind::truncated, origin + ": truncated header");
  }
  const auto version = std::to_integer<std::uint8_t>(bytes[8]);
  if (version != kVersion) {
    throw TensorError(Kind::bad_version, origin + ": unsupported version " + std::to_string(version));
  }
  const auto code = std::to_integer<std::uint8_t>(bytes[9]);
  if (code < 1 || code > 4) {
    throw TensorError(Kind::bad_dtype, origin + ": unknown dtype code " + std::to_string(code));
  }
  const auto dtype = static_cast<DType>(code);
  const std::size_t ndim = std::to_integer<std::uint8_t>(bytes[10]);
  const std::size_t dims_end = kTensorHeaderSize + 8 * ndim;
  if (bytes.size() < dims_end) throw TensorError(Kind::truncated, origin + ": truncated dims");

  std::vector<std::uint64_t> dims(ndim);
  for (std::size_t i = 0; i < ndim; ++i) {
    dims[i] = get_le<std::uint64_t>(bytes.data() + kTensorHeaderSize + 8 * i);
  }
  const std::uint64_t count = product(dims);
  const std::uint64_t available = (bytes.size() - dims_end) / dtype_size(dtype);
  if (count > available || (bytes.size() - dims_end) < count * dtype_size(dtype)) {
    throw TensorError(Kind::truncated, origin + ": truncated payload");
  }
  if (bytes.size() - dims_end != count * dtype_size(dtype)) {
    throw TensorError(Kind::trailing_bytes, origin + ": trailing bytes after payload");
  }

  const std::byte* p = bytes.data() + dims_end;
  switch (dtype) {
    case DType::f32: return Tensor::from(std::move(dims), decode_payload<float>(p, count));
    case DType::u16: return Tensor::from(std::move(dims), decode_payload<std::uint16_t>(p, count));
    case DType::i32: return Tensor::from(std::move(dims), decode_payload<std::int32_t>(p, count));
    case DType::u8: return Tensor::from(std::move(dims), decode_payload<std::uint8_t>(p, count));
  }
  throw TensorError(Kind::bad_dtype, origin + ": unknown dtype");
}

void write_tensor(const std::filesystem::path& path, const Tensor& tensor) {
  const auto bytes = encode_tensor(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TensorError(TensorError::Kind::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw TensorError(TensorError::Kind::io, "write failed: " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TensorError(TensorError::Kind::io, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw TensorError(TensorError::Kind::io, "read failed: " + path.string());
  return decode_tensor(std::as_bytes(std::span<const char>(raw)), path.string());
}

}  // namespace scim
