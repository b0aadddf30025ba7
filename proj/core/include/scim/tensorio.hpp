#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace scim {

/// On-disk element type. Codes are the dtype byte of the header.
enum class DType : std::uint8_t { f32 = 1, u16 = 2, i32 = 3, u8 = 4 };

std::string_view dtype_name(DType dtype);
std::size_t dtype_size(DType dtype);

/// A dense row-major tensor loaded from or destined for a tensor file.
///
/// Wire format (all integers little-endian):
///   bytes 0..7   magic "SCIMTNSR"
///   byte  8      version (1)
///   byte  9      dtype code
///   byte  10     ndim
///   bytes 11..15 zero
///   ndim x u64   dims
///   payload      row-major elements
class Tensor {
 public:
  using Storage = std::variant<std::vector<float>, std::vector<std::uint16_t>,
                               std::vector<std::int32_t>, std::vector<std::uint8_t>>;

  Tensor() = default;
  /// Throws TensorError(shape_mismatch) if the payload length is not prod(dims).
  Tensor(std::vector<std::uint64_t> dims, Storage payload);

  template <typename T>
  static Tensor from(std::vector<std::uint64_t> dims, std::vector<T> values) {
    return Tensor(std::move(dims), Storage(std::move(values)));
  }

  DType dtype() const;
  const std::vector<std::uint64_t>& dims() const { return dims_; }
  std::size_t ndim() const { return dims_.size(); }
  std::uint64_t element_count() const;
  const Storage& storage() const { return payload_; }

  template <typename T>
  const std::vector<T>& values() const {
    return std::get<std::vector<T>>(payload_);
  }
  template <typename T>
  bool holds() const {
    return std::holds_alternative<std::vector<T>>(payload_);
  }

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  std::vector<std::uint64_t> dims_;
  Storage payload_ = std::vector<float>{};
};

class TensorError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, bad_version, bad_dtype, truncated, trailing_bytes, shape_mismatch };
  TensorError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::size_t kTensorHeaderSize = 16;

std::vector<std::byte> encode_tensor(const Tensor& tensor);
Tensor decode_tensor(std::span<const std::byte> bytes, const std::string& origin = "<memory>");

void write_tensor(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_tensor(const std::filesystem::path& path);

}  // namespace scim
