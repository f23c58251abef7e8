#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace contentforge {

enum class Errc {
    parse_error,
    schema_violation,
    duplicate_page_id,
    bad_magic,
    unsupported_version,
    truncated,
    non_monotone_offsets,
    non_contiguous_offsets,
    invalid_index,
    unknown_page,
    record_decode,
    region_length_mismatch,
    invalid_theme,
    invalid_font,
    bitmap_size_mismatch,
    unencodable_codepoint,
    offset_overflow,
    invalid_argument,
    canvas_overflow,
    duplicate_codepoint,
    empty_index,
    malformed_archive,
    unsupported_method,
    path_collision,
    invalid_path,
    oversize,
    not_found,
    io,
};

inline std::string_view to_string(Errc code)
{
    switch (code) {
    case Errc::parse_error: return "parse_error";
    case Errc::schema_violation: return "schema_violation";
    case Errc::duplicate_page_id: return "duplicate_page_id";
    case Errc::bad_magic: return "bad_magic";
    case Errc::unsupported_version: return "unsupported_version";
    case Errc::truncated: return "truncated";
    case Errc::non_monotone_offsets: return "non_monotone_offsets";
    case Errc::non_contiguous_offsets: return "non_contiguous_offsets";
    case Errc::invalid_index: return "invalid_index";
    case Errc::unknown_page: return "unknown_page";
    case Errc::record_decode: return "record_decode";
    case Errc::region_length_mismatch: return "region_length_mismatch";
    case Errc::invalid_theme: return "invalid_theme";
    case Errc::invalid_font: return "invalid_font";
    case Errc::bitmap_size_mismatch: return "bitmap_size_mismatch";
    case Errc::unencodable_codepoint: return "unencodable_codepoint";
    case Errc::offset_overflow: return "offset_overflow";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::canvas_overflow: return "canvas_overflow";
    case Errc::duplicate_codepoint: return "duplicate_codepoint";
    case Errc::empty_index: return "empty_index";
    case Errc::malformed_archive: return "malformed_archive";
    case Errc::unsupported_method: return "unsupported_method";
    case Errc::path_collision: return "path_collision";
    case Errc::invalid_path: return "invalid_path";
    case Errc::oversize: return "oversize";
    case Errc::not_found: return "not_found";
    case Errc::io: return "io";
    }
    return "unknown";
}

/// Base exception for every failure raised by the library. The code is
/// stable and meant for programmatic dispatch; the message is for humans.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code)
    {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Manifest syntax error with the byte position reported by the parser.
class ParseError : public Error {
public:
    ParseError(std::size_t position, const std::string& message)
        : Error(Errc::parse_error, message), position_(position)
    {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

} // namespace contentforge
