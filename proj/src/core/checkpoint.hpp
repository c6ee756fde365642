#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fungen.hpp"

namespace ginr {

// "GINR" checkpoint container: magic, u16 format version, a section table
// (name, dtype, shape, byte offset into the payload), little-endian f32
// payload, trailing CRC32 over everything before it. Round-trips all
// parameters bit-exactly at f32.

struct Section {
  std::string name;
  std::vector<int64_t> shape;
  std::vector<float> data;
};

std::vector<uint8_t> encode_checkpoint(const std::vector<Section>& sections);
std::vector<Section> decode_checkpoint(const std::vector<uint8_t>& bytes);

void write_checkpoint(const std::string& path, const std::vector<Section>& sections);
std::vector<Section> read_checkpoint(const std::string& path);

void save_generator(const std::string& path, const GeneratorModel& model);
GeneratorModel load_generator(const std::string& path);

uint32_t checkpoint_crc(const std::string& path);

}  // namespace ginr
