#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace das3d {

/// Failure categories reported by every module. Each I/O and validation
/// path raises a distinct code so callers can branch without parsing text.
enum class Errc {
  file_not_found,
  corrupt_header,
  wrong_channels,
  bad_magic,
  dimension_mismatch,
  invalid_argument,
  degenerate_input,
  kernel_too_large,
  no_foreground,
  single_class,
  no_components,
  empty_source,
  io_failure,
};

inline constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::file_not_found: return "file_not_found";
    case Errc::corrupt_header: return "corrupt_header";
    case Errc::wrong_channels: return "wrong_channels";
    case Errc::bad_magic: return "bad_magic";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::degenerate_input: return "degenerate_input";
    case Errc::kernel_too_large: return "kernel_too_large";
    case Errc::no_foreground: return "no_foreground";
    case Errc::single_class: return "single_class";
    case Errc::no_components: return "no_components";
    case Errc::empty_source: return "empty_source";
    case Errc::io_failure: return "io_failure";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

namespace detail {

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace detail
}  // namespace das3d
