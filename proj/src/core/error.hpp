#pragma once

#include <stdexcept>
#include <string>

namespace ginr {

enum class Errc {
  invalid_argument,
  shape_mismatch,
  io,
  format,
  crc,
  capacity,
  numeric,
  checksum,
  unsupported,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc c, const std::string& msg) { throw Error(c, msg); }

}  // namespace ginr
