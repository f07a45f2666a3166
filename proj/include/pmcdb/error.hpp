#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pmcdb {

enum class ErrorKind {
  Parameter,  // caller supplied malformed input
  Protocol,   // message or state inconsistent with the protocol
  Auth,       // authenticated decryption failed
  Revoked,    // request from a revoked user
  Io,         // file or socket failure
};

enum class Role : std::uint8_t { User = 0, Admin = 1, Sss = 2, Iws = 3, Rss = 4 };

std::string_view to_string(ErrorKind kind);
std::string_view to_string(Role role);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, Role origin = Role::User)
      : std::runtime_error(what), kind_(kind), origin_(origin) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Role that raised the error; meaningful for errors carried over the wire.
  Role origin() const noexcept { return origin_; }

 private:
  ErrorKind kind_;
  Role origin_;
};

[[noreturn]] void throw_parameter(const std::string& what);
[[noreturn]] void throw_protocol(const std::string& what);

}  // namespace pmcdb
