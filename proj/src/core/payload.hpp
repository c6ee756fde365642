#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ginr {

// Message framing for byte payloads: u32 length prefix, payload bytes,
// CRC32, then seeded pseudo-random padding bits up to capacity. The receiver
// needs no extra state: length and CRC come out of the bitstream.

int64_t payload_bits_needed(int64_t payload_len);

// bits are one byte per bit (0/1), MSB-first within each payload byte
std::vector<uint8_t> payload_to_bits(std::span<const uint8_t> payload, uint64_t pad_seed,
                                     int64_t capacity_bits);

struct PayloadDecodeResult {
  std::vector<uint8_t> bytes;
  bool checksum_ok = false;
};

PayloadDecodeResult payload_from_bits(std::span<const uint8_t> bits);

}  // namespace ginr
