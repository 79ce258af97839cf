#include "recurnet/image_io.hpp"

#include <zlib.h>

#include <cctype>
#include <cstdlib>
#include <cstring>
#include <string>

#include "recurnet/binary_io.hpp"
#include "recurnet/errors.hpp"

namespace recurnet {

namespace {

void check_image(const RgbImage& img) {
  if (img.width < 1 || img.height < 1 ||
      img.pixels.size() != static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height) * 3)
    throw DataError("image buffer does not match its " + std::to_string(img.width) + "x" +
                    std::to_string(img.height) + " size");
}

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::uint32_t get_be32(std::span<const std::uint8_t> b) {
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

void put_chunk(std::vector<std::uint8_t>& out, const char* type, std::span<const std::uint8_t> data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  return pb <= pc ? b : c;
}

}  // namespace

std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  check_image(img);
  const std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&](const char* what) {
    skip_space();
    const std::size_t start = pos;
    long v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9' && v < 1000000) v = v * 10 + (bytes[pos++] - '0');
    if (pos == start) throw FormatError(std::string("PPM header lacks ") + what, start);
    return static_cast<int>(v);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw FormatError("bad magic: expected \"P6\"", 0);
  pos = 2;
  RgbImage img;
  img.width = number("width");
  img.height = number("height");
  const std::size_t maxval_at = pos;
  if (number("maxval") != 255) throw FormatError("only 8-bit PPM (maxval 255) is supported", maxval_at);
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError("PPM header not terminated", pos);
  ++pos;
  const std::size_t need = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height) * 3;
  if (img.width < 1 || img.height < 1) throw FormatError("PPM with empty extent", 0);
  if (bytes.size() - pos != need)
    throw FormatError("PPM pixel data has " + std::to_string(bytes.size() - pos) + " bytes, expected " +
                          std::to_string(need),
                      pos);
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return img;
}

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
  check_image(img);
  std::vector<std::uint8_t> out(kPngSignature, kPngSignature + 8);
  std::vector<std::uint8_t> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(img.width));
  put_be32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // depth 8, truecolor, deflate, filter 0, no interlace
  put_chunk(out, "IHDR", ihdr);
  const std::size_t row = static_cast<std::size_t>(img.width) * 3;
  std::vector<std::uint8_t> raw;
  raw.reserve((row + 1) * static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);
    raw.insert(raw.end(), img.pixels.begin() + static_cast<std::ptrdiff_t>(y * row),
               img.pixels.begin() + static_cast<std::ptrdiff_t>((y + 1) * row));
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), Z_BEST_COMPRESSION) != Z_OK)
    throw DataError("zlib failed to compress image data");
  packed.resize(packed_size);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", {});
  return out;
}

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSignature, 8) != 0)
    throw FormatError("bad magic: expected PNG signature", 0);
  r.take(8, "signature");
  RgbImage img;
  std::vector<std::uint8_t> packed;
  bool have_header = false, ended = false;
  while (!ended) {
    const std::uint64_t at = r.offset();
    const std::uint32_t len = get_be32(r.take(4, "chunk length"));
    const auto type_and_data = r.take(4 + std::uint64_t{len}, "chunk body");
    const std::uint32_t crc = get_be32(r.take(4, "chunk crc"));
    if (crc32(0L, type_and_data.data(), static_cast<uInt>(type_and_data.size())) != crc)
      throw FormatError("PNG chunk CRC mismatch", at);
    const std::string type(type_and_data.begin(), type_and_data.begin() + 4);
    const auto data = type_and_data.subspan(4);
    if (type == "IHDR") {
      if (len != 13) throw FormatError("IHDR has the wrong length", at);
      img.width = static_cast<int>(get_be32(data.subspan(0, 4)));
      img.height = static_cast<int>(get_be32(data.subspan(4, 4)));
      if (data[8] != 8 || data[9] != 2 || data[12] != 0)
        throw FormatError("only 8-bit truecolor non-interlaced PNG is supported", at);
      have_header = true;
    } else if (type == "IDAT") {
      packed.insert(packed.end(), data.begin(), data.end());
    } else if (type == "IEND") {
      ended = true;
    }
  }
  if (!have_header || img.width < 1 || img.height < 1) throw FormatError("PNG lacks a valid IHDR", 8);
  const std::size_t row = static_cast<std::size_t>(img.width) * 3;
  std::vector<std::uint8_t> raw((row + 1) * static_cast<std::size_t>(img.height));
  uLongf raw_size = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &raw_size, packed.data(), static_cast<uLong>(packed.size())) != Z_OK ||
      raw_size != raw.size())
    throw DataError("PNG image data failed to inflate to the expected size");
  img.pixels.resize(row * static_cast<std::size_t>(img.height));
  for (std::size_t y = 0; y < static_cast<std::size_t>(img.height); ++y) {
    const std::uint8_t filter = raw[y * (row + 1)];
    const std::uint8_t* in = raw.data() + y * (row + 1) + 1;
    std::uint8_t* out = img.pixels.data() + y * row;
    const std::uint8_t* up = y ? out - row : nullptr;
    for (std::size_t x = 0; x < row; ++x) {
      const int a = x >= 3 ? out[x - 3] : 0;
      const int b = up ? up[x] : 0;
      const int c = (up && x >= 3) ? up[x - 3] : 0;
      int pred = 0;
      switch (filter) {
        case 0: pred = 0; break;
        case 1: pred = a; break;
        case 2: pred = b; break;
        case 3: pred = (a + b) / 2; break;
        case 4: pred = paeth(a, b, c); break;
        default: throw DataError("unknown PNG row filter " + std::to_string(filter));
      }
      out[x] = static_cast<std::uint8_t>(in[x] + pred);
    }
  }
  return img;
}

void write_image(const RgbImage& img, const std::filesystem::path& path, ImageFormat format) {
  write_file_bytes(path, format == ImageFormat::ppm ? encode_ppm(img) : encode_png(img));
}

RgbImage read_image(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes);
  return decode_png(bytes);
}

}  // namespace recurnet
