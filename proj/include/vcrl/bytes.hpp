#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vcrl {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Invalid argument to an operation (out-of-range index, bad probability, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Operation not allowed in the current protocol state.
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Truncated or otherwise malformed wire data.
class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * A 32-byte opaque value: SHA-256 output, serial number, chain key.
 */
class Digest {
public:
    static constexpr std::size_t size = 32;

    Digest() = default;
    explicit Digest(const std::array<std::uint8_t, size>& bytes) : bytes_(bytes) {}

    static Digest from_view(ByteView bytes);
    static Digest from_hex(std::string_view hex);

    const std::array<std::uint8_t, size>& bytes() const { return bytes_; }
    std::array<std::uint8_t, size>& bytes() { return bytes_; }
    ByteView view() const { return ByteView(bytes_.data(), bytes_.size()); }
    std::string hex() const;

    /// First eight bytes read big-endian.
    std::uint64_t prefix64() const;

    auto operator<=>(const Digest&) const = default;

private:
    std::array<std::uint8_t, size> bytes_{};
};

struct DigestHash {
    std::size_t operator()(const Digest& d) const noexcept { return static_cast<std::size_t>(d.prefix64()); }
};

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view hex);

/// Big-endian append-only encoder.
class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void raw(ByteView bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }
    void digest(const Digest& d) { raw(d.view()); }
    /// u32 length prefix followed by the bytes.
    void var_bytes(ByteView bytes);

    std::size_t size() const { return buf_.size(); }
    const Bytes& bytes() const { return buf_; }
    Bytes take() { return std::move(buf_); }

private:
    Bytes buf_;
};

/// Big-endian decoder over a borrowed buffer; throws DecodeError on underrun.
class Reader {
public:
    explicit Reader(ByteView data) : data_(data) {}
    explicit Reader(Bytes&&) = delete; // would dangle

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    ByteView raw(std::size_t n);
    Digest digest() { return Digest::from_view(raw(Digest::size)); }
    Bytes var_bytes(std::size_t max_len = 1u << 24);

    std::size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }
    void expect_done() const;

private:
    ByteView data_;
    std::size_t pos_ = 0;
};

} // namespace vcrl
