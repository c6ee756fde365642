#include "payload.hpp"

#include <zlib.h>

#include "error.hpp"
#include "rng.hpp"

namespace ginr {

namespace {

constexpr int64_t kFrameOverhead = 8;  // length u32 + crc u32

void push_byte_bits(std::vector<uint8_t>& bits, uint8_t byte) {
  for (int i = 7; i >= 0; --i) bits.push_back((byte >> i) & 1);
}

uint8_t pop_byte_bits(std::span<const uint8_t> bits, size_t pos) {
  uint8_t b = 0;
  for (int i = 0; i < 8; ++i) b = static_cast<uint8_t>((b << 1) | (bits[pos + static_cast<size_t>(i)] & 1));
  return b;
}

}  // namespace

int64_t payload_bits_needed(int64_t payload_len) {
  if (payload_len < 0) fail(Errc::invalid_argument, "payload: negative length");
  return 8 * (payload_len + kFrameOverhead);
}

std::vector<uint8_t> payload_to_bits(std::span<const uint8_t> payload, uint64_t pad_seed,
                                     int64_t capacity_bits) {
  const int64_t needed = payload_bits_needed(static_cast<int64_t>(payload.size()));
  if (needed > capacity_bits)
    fail(Errc::capacity, "payload of " + std::to_string(payload.size()) + " bytes needs " +
                             std::to_string(needed) + " bits but capacity is " +
                             std::to_string(capacity_bits));
  std::vector<uint8_t> bits;
  bits.reserve(static_cast<size_t>(capacity_bits));
  const uint32_t len = static_cast<uint32_t>(payload.size());
  for (int i = 0; i < 4; ++i) push_byte_bits(bits, static_cast<uint8_t>(len >> (8 * i)));
  for (uint8_t b : payload) push_byte_bits(bits, b);
  const uint32_t crc = crc32(0, payload.data(), static_cast<uInt>(payload.size()));
  for (int i = 0; i < 4; ++i) push_byte_bits(bits, static_cast<uint8_t>(crc >> (8 * i)));
  Rng rng(pad_seed);
  while (static_cast<int64_t>(bits.size()) < capacity_bits)
    bits.push_back(static_cast<uint8_t>(rng.next_u64() & 1));
  return bits;
}

PayloadDecodeResult payload_from_bits(std::span<const uint8_t> bits) {
  if (static_cast<int64_t>(bits.size()) < 8 * kFrameOverhead)
    fail(Errc::format, "payload: bitstream shorter than the frame header");
  uint32_t len = 0;
  for (int i = 0; i < 4; ++i)
    len |= static_cast<uint32_t>(pop_byte_bits(bits, static_cast<size_t>(8 * i))) << (8 * i);
  PayloadDecodeResult out;
  const int64_t avail = (static_cast<int64_t>(bits.size()) - 8 * kFrameOverhead) / 8;
  if (static_cast<int64_t>(len) > avail) {
    // corrupt length field: recover what we can, checksum cannot hold
    len = static_cast<uint32_t>(avail);
    out.checksum_ok = false;
    out.bytes.resize(len);
    for (uint32_t i = 0; i < len; ++i) out.bytes[i] = pop_byte_bits(bits, 32 + 8 * static_cast<size_t>(i));
    return out;
  }
  out.bytes.resize(len);
  for (uint32_t i = 0; i < len; ++i) out.bytes[i] = pop_byte_bits(bits, 32 + 8 * static_cast<size_t>(i));
  uint32_t stored = 0;
  const size_t crc_at = 32 + 8 * static_cast<size_t>(len);
  for (int i = 0; i < 4; ++i)
    stored |= static_cast<uint32_t>(pop_byte_bits(bits, crc_at + static_cast<size_t>(8 * i))) << (8 * i);
  const uint32_t actual = crc32(0, out.bytes.data(), static_cast<uInt>(out.bytes.size()));
  out.checksum_ok = stored == actual;
  return out;
}

}  // namespace ginr
