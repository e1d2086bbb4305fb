#include <vcrl/bytes.hpp>

#include <bit>
#include <cstring>

namespace vcrl {

Digest Digest::from_view(ByteView bytes)
{
    if (bytes.size() != size) {
        throw DecodeError("digest must be 32 bytes, got " + std::to_string(bytes.size()));
    }
    Digest d;
    std::memcpy(d.bytes_.data(), bytes.data(), size);
    return d;
}

Digest Digest::from_hex(std::string_view hex)
{
    const Bytes raw = vcrl::from_hex(hex);
    return from_view(raw);
}

std::string Digest::hex() const
{
    return to_hex(view());
}

std::uint64_t Digest::prefix64() const
{
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < 8; ++i) {
        v = (v << 8) | bytes_[i];
    }
    return v;
}

std::string to_hex(ByteView bytes)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

namespace {

int nibble(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

Bytes from_hex(std::string_view hex)
{
    if (hex.size() % 2 != 0) {
        throw DecodeError("odd-length hex string");
    }
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int hi = nibble(hex[2 * i]);
        const int lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) {
            throw DecodeError("invalid hex digit");
        }
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

void Writer::u16(std::uint16_t v)
{
    buf_.push_back(static_cast<std::uint8_t>(v >> 8));
    buf_.push_back(static_cast<std::uint8_t>(v));
}

void Writer::u32(std::uint32_t v)
{
    for (int s = 24; s >= 0; s -= 8) {
        buf_.push_back(static_cast<std::uint8_t>(v >> s));
    }
}

void Writer::u64(std::uint64_t v)
{
    for (int s = 56; s >= 0; s -= 8) {
        buf_.push_back(static_cast<std::uint8_t>(v >> s));
    }
}

void Writer::f64(double v)
{
    u64(std::bit_cast<std::uint64_t>(v));
}

void Writer::var_bytes(ByteView bytes)
{
    u32(static_cast<std::uint32_t>(bytes.size()));
    raw(bytes);
}

ByteView Reader::raw(std::size_t n)
{
    if (remaining() < n) {
        throw DecodeError("unexpected end of data");
    }
    ByteView out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::uint8_t Reader::u8()
{
    return raw(1)[0];
}

std::uint16_t Reader::u16()
{
    const ByteView b = raw(2);
    return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
}

std::uint32_t Reader::u32()
{
    const ByteView b = raw(4);
    std::uint32_t v = 0;
    for (auto x : b) v = (v << 8) | x;
    return v;
}

std::uint64_t Reader::u64()
{
    const ByteView b = raw(8);
    std::uint64_t v = 0;
    for (auto x : b) v = (v << 8) | x;
    return v;
}

double Reader::f64()
{
    return std::bit_cast<double>(u64());
}

Bytes Reader::var_bytes(std::size_t max_len)
{
    const std::uint32_t len = u32();
    if (len > max_len) {
        throw DecodeError("length prefix exceeds limit");
    }
    const ByteView b = raw(len);
    return Bytes(b.begin(), b.end());
}

void Reader::expect_done() const
{
    if (!done()) {
        throw DecodeError("trailing bytes after message");
    }
}

} // namespace vcrl
