#include "checkpoint.hpp"

#include <zlib.h>

#include <cstring>

#include "error.hpp"
#include "image_io.hpp"

namespace ginr {

namespace {

constexpr char kMagic[4] = {'G', 'I', 'N', 'R'};
constexpr uint16_t kVersion = 1;
constexpr uint8_t kDtypeF32 = 0;

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

struct Reader {
  const std::vector<uint8_t>& b;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > b.size()) fail(Errc::format, "checkpoint: truncated");
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(b[pos] | (b[pos + 1] << 8));
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[pos + static_cast<size_t>(i)]) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[pos + static_cast<size_t>(i)]) << (8 * i);
    pos += 8;
    return v;
  }
};

int64_t section_numel(const Section& s) {
  int64_t n = 1;
  for (int64_t d : s.shape) n *= d;
  return n;
}

}  // namespace

std::vector<uint8_t> encode_checkpoint(const std::vector<Section>& sections) {
  std::vector<uint8_t> out(kMagic, kMagic + 4);
  put_u16(out, kVersion);
  put_u16(out, static_cast<uint16_t>(sections.size()));
  uint64_t offset = 0;
  for (const Section& s : sections) {
    if (static_cast<int64_t>(s.data.size()) != section_numel(s))
      fail(Errc::shape_mismatch, "checkpoint: section '" + s.name + "' data/shape mismatch");
    put_u16(out, static_cast<uint16_t>(s.name.size()));
    out.insert(out.end(), s.name.begin(), s.name.end());
    out.push_back(kDtypeF32);
    out.push_back(static_cast<uint8_t>(s.shape.size()));
    for (int64_t d : s.shape) put_u32(out, static_cast<uint32_t>(d));
    put_u64(out, offset);
    offset += 4 * s.data.size();
  }
  put_u64(out, offset);
  for (const Section& s : sections)
    for (float f : s.data) {
      uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(out, bits);
    }
  const uint32_t crc = crc32(0, out.data(), static_cast<uInt>(out.size()));
  put_u32(out, crc);
  return out;
}

std::vector<Section> decode_checkpoint(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    fail(Errc::format, "checkpoint: bad magic");
  const uint32_t stored_crc = [&] {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[bytes.size() - 4 + static_cast<size_t>(i)]) << (8 * i);
    return v;
  }();
  const uint32_t actual_crc = crc32(0, bytes.data(), static_cast<uInt>(bytes.size() - 4));
  if (stored_crc != actual_crc) fail(Errc::crc, "checkpoint: CRC mismatch");

  Reader r{bytes, 4};
  const uint16_t version = r.u16();
  if (version != kVersion) fail(Errc::unsupported, "checkpoint: unsupported format version");
  const uint16_t count = r.u16();
  std::vector<Section> sections(count);
  std::vector<uint64_t> offsets(count);
  for (uint16_t i = 0; i < count; ++i) {
    const uint16_t name_len = r.u16();
    r.need(name_len);
    sections[i].name.assign(bytes.begin() + static_cast<int64_t>(r.pos),
                            bytes.begin() + static_cast<int64_t>(r.pos + name_len));
    r.pos += name_len;
    r.need(2);
    const uint8_t dtype = bytes[r.pos++];
    if (dtype != kDtypeF32) fail(Errc::unsupported, "checkpoint: unknown dtype");
    const uint8_t ndim = bytes[r.pos++];
    sections[i].shape.resize(ndim);
    for (uint8_t d = 0; d < ndim; ++d) sections[i].shape[d] = r.u32();
    offsets[i] = r.u64();
  }
  const uint64_t payload_size = r.u64();
  const size_t payload_start = r.pos;
  if (payload_start + payload_size + 4 != bytes.size()) fail(Errc::format, "checkpoint: bad payload size");
  for (uint16_t i = 0; i < count; ++i) {
    const int64_t n = section_numel(sections[i]);
    if (offsets[i] + 4 * static_cast<uint64_t>(n) > payload_size)
      fail(Errc::format, "checkpoint: section '" + sections[i].name + "' exceeds payload");
    sections[i].data.resize(static_cast<size_t>(n));
    const uint8_t* src = bytes.data() + payload_start + offsets[i];
    std::memcpy(sections[i].data.data(), src, 4 * static_cast<size_t>(n));
  }
  return sections;
}

void write_checkpoint(const std::string& path, const std::vector<Section>& sections) {
  write_file(path, encode_checkpoint(sections));
}

std::vector<Section> read_checkpoint(const std::string& path) {
  return decode_checkpoint(read_file(path));
}

namespace {

Section tensor_section(std::string name, const Shape& shape, std::span<const double> values) {
  Section s;
  s.name = std::move(name);
  s.shape = shape;
  s.data.reserve(values.size());
  for (double v : values) s.data.push_back(static_cast<float>(v));
  return s;
}

Section param_section(std::string name, const Param& p) {
  return tensor_section(std::move(name), p.shape, p.value);
}

const Section& find_section(const std::vector<Section>& sections, const std::string& name) {
  for (const Section& s : sections)
    if (s.name == name) return s;
  fail(Errc::format, "checkpoint: missing section '" + name + "'");
}

Param param_from_section(const Section& s) {
  Param p;
  p.shape = s.shape;
  p.value.reserve(s.data.size());
  for (float f : s.data) p.value.push_back(static_cast<double>(f));
  return p;
}

}  // namespace

void save_generator(const std::string& path, const GeneratorModel& m) {
  std::vector<Section> sections;
  Section meta;
  meta.name = "meta";
  meta.shape = {6};
  meta.data = {static_cast<float>(m.hyper.latent_dim),  static_cast<float>(m.hyper.hidden),
               static_cast<float>(m.arch.fourier_features), static_cast<float>(m.arch.fourier_sigma),
               static_cast<float>(m.arch.hidden_width),  static_cast<float>(m.arch.channels)};
  sections.push_back(std::move(meta));
  sections.push_back(tensor_section("embed.b", m.embedding.b_matrix.shape(),
                                    m.embedding.b_matrix.values()));
  sections.push_back(param_section("hyper.w1", m.hyper.w1));
  sections.push_back(param_section("hyper.b1", m.hyper.b1));
  sections.push_back(param_section("hyper.w2", m.hyper.w2));
  sections.push_back(param_section("hyper.b2", m.hyper.b2));
  sections.push_back(param_section("disc.w1", m.disc.w1));
  sections.push_back(param_section("disc.b1", m.disc.b1));
  sections.push_back(param_section("disc.w2", m.disc.w2));
  sections.push_back(param_section("disc.b2", m.disc.b2));
  sections.push_back(param_section("disc.w3", m.disc.w3));
  sections.push_back(param_section("disc.b3", m.disc.b3));
  sections.push_back(param_section("disc.w4", m.disc.w4));
  sections.push_back(param_section("disc.b4", m.disc.b4));
  write_checkpoint(path, sections);
}

GeneratorModel load_generator(const std::string& path) {
  const std::vector<Section> sections = read_checkpoint(path);
  const Section& meta = find_section(sections, "meta");
  if (meta.data.size() != 6) fail(Errc::format, "checkpoint: bad meta section");
  GeneratorModel m;
  m.hyper.latent_dim = static_cast<int64_t>(meta.data[0]);
  m.hyper.hidden = static_cast<int64_t>(meta.data[1]);
  m.arch.fourier_features = static_cast<int64_t>(meta.data[2]);
  m.arch.fourier_sigma = static_cast<double>(meta.data[3]);
  m.arch.hidden_width = static_cast<int64_t>(meta.data[4]);
  m.arch.channels = static_cast<int64_t>(meta.data[5]);

  const Section& eb = find_section(sections, "embed.b");
  Param embed = param_from_section(eb);
  m.embedding = FourierEmbedding::from_matrix(Tensor::leaf(embed.shape, embed.value),
                                              m.arch.fourier_sigma);
  m.hyper.w1 = param_from_section(find_section(sections, "hyper.w1"));
  m.hyper.b1 = param_from_section(find_section(sections, "hyper.b1"));
  m.hyper.w2 = param_from_section(find_section(sections, "hyper.w2"));
  m.hyper.b2 = param_from_section(find_section(sections, "hyper.b2"));
  m.disc.w1 = param_from_section(find_section(sections, "disc.w1"));
  m.disc.b1 = param_from_section(find_section(sections, "disc.b1"));
  m.disc.w2 = param_from_section(find_section(sections, "disc.w2"));
  m.disc.b2 = param_from_section(find_section(sections, "disc.b2"));
  m.disc.w3 = param_from_section(find_section(sections, "disc.w3"));
  m.disc.b3 = param_from_section(find_section(sections, "disc.b3"));
  m.disc.w4 = param_from_section(find_section(sections, "disc.w4"));
  m.disc.b4 = param_from_section(find_section(sections, "disc.b4"));
  if (static_cast<int64_t>(m.hyper.w2.value.size()) != m.hyper.hidden * parameter_count(m.arch))
    fail(Errc::format, "checkpoint: hypernetwork output does not match the architecture");
  return m;
}

uint32_t checkpoint_crc(const std::string& path) {
  const std::vector<uint8_t> bytes = read_file(path);
  if (bytes.size() < 4) fail(Errc::format, "checkpoint: truncated");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[bytes.size() - 4 + static_cast<size_t>(i)]) << (8 * i);
  return v;
}

}  // namespace ginr
