#include "g4d/pgm.hpp"

#include <fstream>
#include <stdexcept>

namespace g4d {

void write_pgm16(const std::string& path, int width, int height,
                 const std::vector<uint16_t>& values) {
  if (values.size() != static_cast<size_t>(width) * height)
    throw std::invalid_argument("write_pgm16: size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pgm16: cannot open " + path);
  out << "P5\n" << width << " " << height << "\n65535\n";
  std::vector<unsigned char> buf(values.size() * 2);
  for (size_t i = 0; i < values.size(); ++i) {
    buf[2 * i] = static_cast<unsigned char>(values[i] >> 8);
    buf[2 * i + 1] = static_cast<unsigned char>(values[i] & 0xff);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), buf.size());
  if (!out) throw std::runtime_error("write_pgm16: write failed: " + path);
}

namespace {
int next_token(std::istream& in) {
  // Skips whitespace and '#' comments per the PGM grammar.
  while (true) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int v;
  if (!(in >> v)) throw std::runtime_error("pgm: bad header token");
  return v;
}
}  // namespace

DepthFrame read_pgm16(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_pgm16: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw std::runtime_error("read_pgm16: not a P5 file: " + path);
  DepthFrame f;
  f.width = next_token(in);
  f.height = next_token(in);
  const int maxval = next_token(in);
  if (maxval != 65535)
    throw std::runtime_error("read_pgm16: expected maxval 65535 in " + path);
  in.get();  // single whitespace after maxval
  const size_t n = static_cast<size_t>(f.width) * f.height;
  std::vector<unsigned char> buf(n * 2);
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (static_cast<size_t>(in.gcount()) != buf.size())
    throw std::runtime_error("read_pgm16: truncated file: " + path);
  f.values.resize(n);
  for (size_t i = 0; i < n; ++i)
    f.values[i] = static_cast<uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
  return f;
}

}  // namespace g4d
