#include "flowadmm/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace flowadmm {

namespace {

void put_le_double(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap64(bits);
  }
  std::array<char, 8> buf;
  std::memcpy(buf.data(), &bits, 8);
  os.write(buf.data(), 8);
}

double get_le_double(std::istream& is) {
  std::array<char, 8> buf;
  is.read(buf.data(), 8);
  std::uint64_t bits;
  std::memcpy(&bits, buf.data(), 8);
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap64(bits);
  }
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream is(path, mode);
  if (!is) throw IoError("cannot open for reading: " + path.string());
  return is;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, mode);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  return os;
}

// Skips whitespace and '#' comment lines between PNM header tokens.
std::string next_pnm_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) {
      tok.push_back(static_cast<char>(c));
      while ((c = is.peek()) != EOF && !std::isspace(c)) tok.push_back(static_cast<char>(is.get()));
      return tok;
    }
  }
  throw IoError("truncated PNM header");
}

unsigned char to_byte(double v) {
  const double scaled = std::round(v * 255.0);
  if (scaled <= 0.0) return 0;
  if (scaled >= 255.0) return 255;
  return static_cast<unsigned char>(scaled);
}

}  // namespace

void write_f64(const std::filesystem::path& path, const Tensor& t) {
  auto os = open_out(path, std::ios::binary);
  os << "F64 " << t.shape().size();
  for (std::size_t d : t.shape()) os << " " << d;
  os << "\n";
  for (std::size_t i = 0; i < t.size(); ++i) put_le_double(os, t[i]);
  if (!os) throw IoError("write failed: " + path.string());
}

Tensor read_f64(const std::filesystem::path& path) {
  auto is = open_in(path, std::ios::binary);
  std::string line;
  if (!std::getline(is, line)) throw IoError("missing F64 header: " + path.string());
  std::istringstream hdr(line);
  std::string magic;
  std::size_t ndim = 0;
  hdr >> magic >> ndim;
  if (magic != "F64" || !hdr) throw IoError("bad F64 header in " + path.string());
  Shape shape(ndim);
  for (std::size_t i = 0; i < ndim; ++i) {
    if (!(hdr >> shape[i])) throw IoError("bad F64 header dims in " + path.string());
  }
  validate_shape(shape);
  std::vector<double> data(numel(shape));
  for (double& v : data) {
    v = get_le_double(is);
    if (!is) throw IoError("truncated F64 payload in " + path.string());
  }
  return Tensor(shape, std::move(data));
}

void write_pgm(const std::filesystem::path& path, const Tensor& t) {
  const ImageDims d = image_dims(t.shape());
  if (d.channels != 1) throw InvalidShapeError("PGM export needs one channel, got " + shape_to_string(t.shape()));
  auto os = open_out(path, std::ios::binary);
  os << "P5\n" << d.width << " " << d.height << "\n255\n";
  for (std::size_t i = 0; i < t.size(); ++i) os.put(static_cast<char>(to_byte(t[i])));
  if (!os) throw IoError("write failed: " + path.string());
}

Tensor read_pgm(const std::filesystem::path& path) {
  auto is = open_in(path, std::ios::binary);
  if (next_pnm_token(is) != "P5") throw IoError("not a binary PGM: " + path.string());
  const std::size_t w = std::stoul(next_pnm_token(is));
  const std::size_t h = std::stoul(next_pnm_token(is));
  const unsigned maxval = static_cast<unsigned>(std::stoul(next_pnm_token(is)));
  if (maxval != 255) throw IoError("unsupported PGM maxval in " + path.string());
  is.get();  // single whitespace after maxval
  std::vector<double> data(w * h);
  for (double& v : data) {
    const int c = is.get();
    if (c == EOF) throw IoError("truncated PGM payload in " + path.string());
    v = static_cast<double>(c) / 255.0;
  }
  return Tensor({h, w}, std::move(data));
}

void write_ppm(const std::filesystem::path& path, const Tensor& t) {
  const ImageDims d = image_dims(t.shape());
  if (d.channels != 3) throw InvalidShapeError("PPM export needs three channels, got " + shape_to_string(t.shape()));
  auto os = open_out(path, std::ios::binary);
  os << "P6\n" << d.width << " " << d.height << "\n255\n";
  const std::size_t plane = d.height * d.width;
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < 3; ++c) os.put(static_cast<char>(to_byte(t[c * plane + p])));
  }
  if (!os) throw IoError("write failed: " + path.string());
}

Tensor read_ppm(const std::filesystem::path& path) {
  auto is = open_in(path, std::ios::binary);
  if (next_pnm_token(is) != "P6") throw IoError("not a binary PPM: " + path.string());
  const std::size_t w = std::stoul(next_pnm_token(is));
  const std::size_t h = std::stoul(next_pnm_token(is));
  const unsigned maxval = static_cast<unsigned>(std::stoul(next_pnm_token(is)));
  if (maxval != 255) throw IoError("unsupported PPM maxval in " + path.string());
  is.get();
  const std::size_t plane = h * w;
  std::vector<double> data(3 * plane);
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < 3; ++c) {
      const int b = is.get();
      if (b == EOF) throw IoError("truncated PPM payload in " + path.string());
      data[c * plane + p] = static_cast<double>(b) / 255.0;
    }
  }
  return Tensor({3, h, w}, std::move(data));
}

void write_image(const std::filesystem::path& path, const Tensor& t) {
  const auto ext = path.extension().string();
  if (ext == ".f64") {
    write_f64(path, t);
  } else if (ext == ".pgm") {
    write_pgm(path, t);
  } else if (ext == ".ppm") {
    write_ppm(path, t);
  } else {
    throw IoError("unknown image extension '" + ext + "' for " + path.string());
  }
}

Tensor read_image(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".f64") return read_f64(path);
  if (ext == ".pgm") return read_pgm(path);
  if (ext == ".ppm") return read_ppm(path);
  throw IoError("unknown image extension '" + ext + "' for " + path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  auto os = open_out(path, std::ios::binary);
  os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  auto is = open_in(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace flowadmm
