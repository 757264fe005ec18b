#ifndef LOGSIEVE_BINIO_HPP
#define LOGSIEVE_BINIO_HPP

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "logsieve/errors.hpp"

namespace logsieve {

// Little-endian framed binary writer/reader for the model files.
// Every file starts with a 4-byte magic and a u32 format version; any
// read past end of data raises ModelFormatError rather than returning
// garbage.

class BinWriter {
 public:
  explicit BinWriter(std::ostream& os) : os_(os) {}

  void magic(const char tag[4], std::uint32_t version) {
    os_.write(tag, 4);
    u32(version);
  }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw_le(v); }
  void u64(std::uint64_t v) { raw_le(v); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    raw_le(bits);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void f64s(const std::vector<double>& v) {
    u64(v.size());
    for (double d : v) f64(d);
  }

 private:
  template <typename T>
  void raw_le(T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i)
      buf[i] = static_cast<unsigned char>(v >> (8 * i));
    raw(buf, sizeof(T));
  }
  void raw(const void* p, std::size_t n) {
    os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  std::ostream& os_;
};

class BinReader {
 public:
  explicit BinReader(std::istream& is) : is_(is) {}

  // Checks tag and returns the version; throws on mismatch.
  std::uint32_t magic(const char tag[4]) {
    char got[4];
    raw(got, 4);
    if (std::memcmp(got, tag, 4) != 0)
      throw ModelFormatError("bad magic, expected '" +
                             std::string(tag, 4) + "'");
    return u32();
  }
  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
  }
  std::uint32_t u32() { return raw_le<std::uint32_t>(); }
  std::uint64_t u64() { return raw_le<std::uint64_t>(); }
  double f64() {
    std::uint64_t bits = raw_le<std::uint64_t>();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    std::uint32_t n = u32();
    if (n > (1u << 28)) throw ModelFormatError("string length implausible");
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  std::vector<double> f64s() {
    std::uint64_t n = u64();
    if (n > (1ull << 32)) throw ModelFormatError("vector length implausible");
    std::vector<double> v(n);
    for (auto& d : v) d = f64();
    return v;
  }
  // Must be called once all content is consumed; trailing bytes mean the
  // file does not match the declared layout.
  void expect_eof() {
    char c;
    is_.read(&c, 1);
    if (!is_.eof()) throw ModelFormatError("trailing bytes after model data");
  }

 private:
  template <typename T>
  T raw_le() {
    unsigned char buf[sizeof(T)];
    raw(buf, sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
  }
  void raw(void* p, std::size_t n) {
    is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n)
      throw ModelFormatError("truncated file");
  }
  std::istream& is_;
};

}  // namespace logsieve

#endif  // LOGSIEVE_BINIO_HPP
