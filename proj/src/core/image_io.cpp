#include "image_io.hpp"

#include <zlib.h>

#include <cctype>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include "error.hpp"

namespace ginr {

namespace {

void put_u32_be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

uint32_t get_u32_be(const uint8_t* p) {
  return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
         (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

void append_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& data) {
  put_u32_be(out, static_cast<uint32_t>(data.size()));
  const size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uint32_t crc =
      crc32(0, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32_be(out, crc);
}

const uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

std::vector<uint8_t> encode_png(const ImageGrid& img) {
  validate_image(img);
  const int64_t h = img.height, w = img.width, c = img.channels;
  const std::vector<uint8_t> q = quantize8(img);

  // scanlines, filter type 0 on every row
  std::vector<uint8_t> raw;
  raw.reserve(static_cast<size_t>(h * (1 + w * c)));
  for (int64_t y = 0; y < h; ++y) {
    raw.push_back(0);
    raw.insert(raw.end(), q.begin() + y * w * c, q.begin() + (y + 1) * w * c);
  }
  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> comp(comp_len);
  if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    fail(Errc::io, "png: deflate failed");
  comp.resize(comp_len);

  std::vector<uint8_t> out(kPngSig, kPngSig + 8);
  std::vector<uint8_t> ihdr;
  put_u32_be(ihdr, static_cast<uint32_t>(w));
  put_u32_be(ihdr, static_cast<uint32_t>(h));
  ihdr.push_back(8);                      // bit depth
  ihdr.push_back(c == 3 ? 2 : 0);         // color type
  ihdr.push_back(0);                      // compression
  ihdr.push_back(0);                      // filter method
  ihdr.push_back(0);                      // no interlace
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", comp);
  append_chunk(out, "IEND", {});
  return out;
}

ImageGrid decode_png(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSig, 8) != 0)
    fail(Errc::format, "png: bad signature");
  size_t pos = 8;
  int64_t w = 0, h = 0, channels = 0;
  std::vector<uint8_t> idat;
  bool saw_ihdr = false, saw_iend = false;
  while (pos + 12 <= bytes.size() && !saw_iend) {
    const uint32_t len = get_u32_be(&bytes[pos]);
    if (pos + 12 + len > bytes.size()) fail(Errc::format, "png: truncated chunk");
    const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
    const uint8_t* data = &bytes[pos + 8];
    const uint32_t stored_crc = get_u32_be(&bytes[pos + 8 + len]);
    const uint32_t actual_crc = crc32(0, &bytes[pos + 4], len + 4);
    if (stored_crc != actual_crc) fail(Errc::crc, "png: chunk CRC mismatch");
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) fail(Errc::format, "png: bad IHDR");
      w = get_u32_be(data);
      h = get_u32_be(data + 4);
      const uint8_t depth = data[8], color = data[9], interlace = data[12];
      if (depth != 8) fail(Errc::unsupported, "png: only 8-bit depth supported");
      if (color == 0)
        channels = 1;
      else if (color == 2)
        channels = 3;
      else
        fail(Errc::unsupported, "png: only grayscale and RGB supported");
      if (interlace != 0) fail(Errc::unsupported, "png: interlacing not supported");
      saw_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      saw_iend = true;
    }
    pos += 12 + len;
  }
  if (!saw_ihdr || idat.empty()) fail(Errc::format, "png: missing IHDR or IDAT");
  if (w < 1 || h < 1) fail(Errc::format, "png: bad dimensions");

  const int64_t stride = w * channels;
  std::vector<uint8_t> raw(static_cast<size_t>(h * (1 + stride)));
  uLongf raw_len = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
      raw_len != raw.size())
    fail(Errc::format, "png: inflate failed");

  // undo per-row filters; bpp is one sample here (8-bit)
  const int64_t bpp = channels;
  std::vector<uint8_t> pix(static_cast<size_t>(h * stride));
  for (int64_t y = 0; y < h; ++y) {
    const uint8_t filter = raw[static_cast<size_t>(y * (1 + stride))];
    const uint8_t* src = &raw[static_cast<size_t>(y * (1 + stride) + 1)];
    uint8_t* cur = &pix[static_cast<size_t>(y * stride)];
    const uint8_t* up = y > 0 ? &pix[static_cast<size_t>((y - 1) * stride)] : nullptr;
    for (int64_t x = 0; x < stride; ++x) {
      const int left = x >= bpp ? cur[x - bpp] : 0;
      const int above = up ? up[x] : 0;
      const int upleft = (up && x >= bpp) ? up[x - bpp] : 0;
      int v = src[x];
      switch (filter) {
        case 0: break;
        case 1: v += left; break;
        case 2: v += above; break;
        case 3: v += (left + above) / 2; break;
        case 4: v += paeth(left, above, upleft); break;
        default: fail(Errc::format, "png: unknown filter type");
      }
      cur[x] = static_cast<uint8_t>(v & 0xFF);
    }
  }
  return dequantize8(h, w, channels, pix);
}

std::vector<uint8_t> encode_pnm(const ImageGrid& img) {
  validate_image(img);
  const std::vector<uint8_t> q = quantize8(img);
  std::string header = (img.channels == 3 ? "P6\n" : "P5\n") + std::to_string(img.width) + " " +
                       std::to_string(img.height) + "\n255\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), q.begin(), q.end());
  return out;
}

ImageGrid decode_pnm(const std::vector<uint8_t>& bytes) {
  size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {  // comment to end of line
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) tok.push_back(static_cast<char>(bytes[pos++]));
    return tok;
  };
  const std::string magic = next_token();
  int64_t channels;
  if (magic == "P5")
    channels = 1;
  else if (magic == "P6")
    channels = 3;
  else
    fail(Errc::format, "pnm: expected P5 or P6");
  const std::string ws = next_token(), hs = next_token(), maxs = next_token();
  if (ws.empty() || hs.empty() || maxs.empty()) fail(Errc::format, "pnm: truncated header");
  const int64_t w = std::stoll(ws), h = std::stoll(hs), maxv = std::stoll(maxs);
  if (maxv != 255) fail(Errc::unsupported, "pnm: only maxval 255 supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) fail(Errc::format, "pnm: bad header terminator");
  ++pos;
  const int64_t count = h * w * channels;
  if (static_cast<int64_t>(bytes.size() - pos) < count) fail(Errc::format, "pnm: truncated pixel data");
  std::vector<uint8_t> pix(bytes.begin() + static_cast<int64_t>(pos),
                           bytes.begin() + static_cast<int64_t>(pos) + count);
  return dequantize8(h, w, channels, pix);
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(Errc::io, "read failed: " + path);
  return bytes;
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io, "cannot create file: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::io, "write failed: " + path);
}

ImageGrid read_image(const std::string& path) {
  const std::vector<uint8_t> bytes = read_file(path);
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'))
    return decode_pnm(bytes);
  fail(Errc::format, "unrecognized image format: " + path);
}

void write_image(const ImageGrid& img, const std::string& path) {
  const auto dot = path.find_last_of('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".pgm" || ext == ".ppm") {
    if ((ext == ".pgm") != (img.channels == 1))
      fail(Errc::invalid_argument, "write_image: extension does not match channel count");
    write_file(path, encode_pnm(img));
  } else {
    write_file(path, encode_png(img));
  }
}

}  // namespace ginr
