#pragma once

#include <stdexcept>
#include <string>

namespace sesa {

// Every failure the library can report, so callers (and tests) can match on
// the category instead of parsing message text.
enum class errc {
  parse_error,
  unsupported_format,
  empty_audio,
  label_error,
  layout_error,
  parameter_error,
  domain_error,
  data_error,
  shape_error,
  fit_error,
  degenerate_filter,
  degenerate_data,
  stratification_error,
  io_error,
  integrity_error,
  version_error,
  fetch_error,
  extraction_error,
  usage_error,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::parse_error: return "parse_error";
    case errc::unsupported_format: return "unsupported_format";
    case errc::empty_audio: return "empty_audio";
    case errc::label_error: return "label_error";
    case errc::layout_error: return "layout_error";
    case errc::parameter_error: return "parameter_error";
    case errc::domain_error: return "domain_error";
    case errc::data_error: return "data_error";
    case errc::shape_error: return "shape_error";
    case errc::fit_error: return "fit_error";
    case errc::degenerate_filter: return "degenerate_filter";
    case errc::degenerate_data: return "degenerate_data";
    case errc::stratification_error: return "stratification_error";
    case errc::io_error: return "io_error";
    case errc::integrity_error: return "integrity_error";
    case errc::version_error: return "version_error";
    case errc::fetch_error: return "fetch_error";
    case errc::extraction_error: return "extraction_error";
    case errc::usage_error: return "usage_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, errc code, const std::string& msg) {
  if (!cond) raise(code, msg);
}

}  // namespace sesa
