#pragma once

#include <string>
#include <vector>

#include "image.hpp"

namespace ginr {

// PNG (8-bit gray / RGB, non-interlaced) and binary PGM/PPM codecs. Readers
// sniff the magic bytes, writers pick the container from the extension
// (.png default, .pgm/.ppm for the raw fallback). Encoding is deterministic:
// the same image always produces the same bytes.

std::vector<uint8_t> encode_png(const ImageGrid& img);
ImageGrid decode_png(const std::vector<uint8_t>& bytes);

std::vector<uint8_t> encode_pnm(const ImageGrid& img);
ImageGrid decode_pnm(const std::vector<uint8_t>& bytes);

ImageGrid read_image(const std::string& path);
void write_image(const ImageGrid& img, const std::string& path);

std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<uint8_t>& bytes);

}  // namespace ginr
