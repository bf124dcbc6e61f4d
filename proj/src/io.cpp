#include "pano/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include <png.h>
#include <nlohmann/json.hpp>

#include "pano/errors.hpp"

namespace pano {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open '" + path + "'");
  return f;
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

void read_png_rows(const std::string& path, int channels, int& height,
                   int& width, std::vector<std::uint8_t>& pixels) {
  FilePtr f = open_file(path, "rb");
  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                 nullptr);
  if (!r.png || !(r.info = png_create_info_struct(r.png)))
    throw IoError("libpng init failed for '" + path + "'");
  if (setjmp(png_jmpbuf(r.png)))
    throw IoError("malformed PNG '" + path + "'");
  png_init_io(r.png, f.get());
  png_read_info(r.png, r.info);

  if (png_get_bit_depth(r.png, r.info) > 8)
    throw IoError("'" + path + "': 16-bit PNG not supported, expected 8-bit");
  png_set_expand(r.png);  // palette/low-bit-depth to 8-bit
  png_set_strip_alpha(r.png);
  if (channels == 3)
    png_set_gray_to_rgb(r.png);
  else
    png_set_rgb_to_gray_fixed(r.png, 1, -1, -1);
  png_read_update_info(r.png, r.info);

  height = static_cast<int>(png_get_image_height(r.png, r.info));
  width = static_cast<int>(png_get_image_width(r.png, r.info));
  if (height < 1 || width < 1 || height > (1 << 20) || width > (1 << 20))
    throw IoError("'" + path + "': bad PNG dimensions");
  pixels.resize(static_cast<std::size_t>(height) * width * channels);
  std::vector<png_bytep> rows(height);
  for (int i = 0; i < height; ++i)
    rows[i] = pixels.data() + static_cast<std::size_t>(i) * width * channels;
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
}

void write_png_rows(const std::string& path, int height, int width,
                    int channels, const std::uint8_t* pixels) {
  FilePtr f = open_file(path, "wb");
  PngWriter w;
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                  nullptr);
  if (!w.png || !(w.info = png_create_info_struct(w.png)))
    throw IoError("libpng init failed for '" + path + "'");
  if (setjmp(png_jmpbuf(w.png)))
    throw IoError("PNG write failed for '" + path + "'");
  png_init_io(w.png, f.get());
  png_set_IHDR(w.png, w.info, width, height, 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  std::vector<png_bytep> rows(height);
  for (int i = 0; i < height; ++i)
    rows[i] = const_cast<png_bytep>(
        pixels + static_cast<std::size_t>(i) * width * channels);
  png_write_image(w.png, rows.data());
  png_write_end(w.png, nullptr);
}

}  // namespace

RgbImage read_png(const std::string& path) {
  int h, w;
  std::vector<std::uint8_t> px;
  read_png_rows(path, 3, h, w, px);
  RgbImage img(h, w);
  std::memcpy(img.data(), px.data(), px.size());
  return img;
}

void write_png(const RgbImage& img, const std::string& path) {
  write_png_rows(path, img.height(), img.width(), 3,
                 reinterpret_cast<const std::uint8_t*>(img.data()));
}

ByteMap read_png_gray(const std::string& path) {
  int h, w;
  std::vector<std::uint8_t> px;
  read_png_rows(path, 1, h, w, px);
  ByteMap img(h, w);
  std::memcpy(img.data(), px.data(), px.size());
  return img;
}

void write_png_gray(const ByteMap& img, const std::string& path) {
  write_png_rows(path, img.height(), img.width(), 1, img.data());
}

FloatMap read_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string magic;
  in >> magic;
  if (magic == "PF")
    throw IoError("'" + path + "': color PFM not supported, expected 'Pf'");
  if (magic != "Pf") throw IoError("'" + path + "': not a PFM file");
  int width = 0, height = 0;
  double scale = 0;
  in >> width >> height >> scale;
  if (!in || width < 1 || height < 1)
    throw IoError("'" + path + "': bad PFM header");
  if (scale >= 0)
    throw IoError("'" + path + "': big-endian PFM not supported");
  in.get();  // single whitespace after the scale line
  FloatMap map(height, width);
  // PFM stores rows bottom-up.
  for (int i = height - 1; i >= 0; --i) {
    in.read(reinterpret_cast<char*>(&map.at(i, 0)),
            static_cast<std::streamsize>(width) * sizeof(float));
    if (!in) throw IoError("'" + path + "': truncated PFM payload");
  }
  return map;
}

void write_pfm(const FloatMap& map, const std::string& path) {
  for (std::size_t p = 0; p < map.size(); ++p)
    if (std::isnan(map[p]))
      throw ContractError("write_pfm: NaN values are not representable");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "Pf\n" << map.width() << " " << map.height() << "\n-1.0\n";
  for (int i = map.height() - 1; i >= 0; --i)
    out.write(reinterpret_cast<const char*>(&map.at(i, 0)),
              static_cast<std::streamsize>(map.width()) * sizeof(float));
  if (!out) throw IoError("write failed for '" + path + "'");
}

void write_semantic(const SemanticMap& map, const std::string& path_prefix) {
  const int channels = static_cast<int>(map.channels.size());
  nlohmann::json legend = nlohmann::json::array();
  legend.push_back("none");
  for (const auto& name : map.legend) legend.push_back(name);
  {
    std::ofstream out(path_prefix + "_legend.json");
    if (!out)
      throw IoError("cannot open '" + path_prefix + "_legend.json'");
    out << legend.dump(2) << "\n";
  }
  for (int c = 0; c < channels; ++c) {
    ByteMap ch(map.channels[c].height(), map.channels[c].width());
    for (std::size_t p = 0; p < ch.size(); ++p)
      ch[p] = map.channels[c][p] ? 255 : 0;
    write_png_gray(ch, path_prefix + "_ch" + std::to_string(c) + ".png");
  }
  if (channels > 255)
    throw ContractError(
        "write_semantic: more than 255 classes cannot be indexed");
  if (channels == 0) return;
  const int h = map.channels[0].height(), w = map.channels[0].width();
  ByteMap index(h, w, std::uint8_t{0});
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      float best = kInfDepth;
      int best_c = -1;
      for (int c = 0; c < channels; ++c) {
        if (!map.channels[c].at(i, j)) continue;
        const float d = c < static_cast<int>(map.hit_distances.size())
                            ? map.hit_distances[c].at(i, j)
                            : 0.0f;
        if (best_c < 0 || d < best) {  // ties keep the lower class index
          best = d;
          best_c = c;
        }
      }
      if (best_c >= 0) index.at(i, j) = static_cast<std::uint8_t>(best_c + 1);
    }
  }
  write_png_gray(index, path_prefix + "_index.png");
}

}  // namespace pano
