#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace anonrisk::util {

// ASCII-only lower-casing; bytes >= 0x80 pass through untouched.
std::string case_fold(std::string_view s);

// case_fold plus folding of common Latin diacritics to their ASCII base
// letter (e.g. "Lanôme" -> "lanome"). Unknown non-ASCII sequences survive.
std::string fold_accents(std::string_view s);

std::string trim(std::string_view s);

// Collapses any run of whitespace to a single space and trims the ends.
std::string collapse_whitespace(std::string_view s);

// CRLF and lone CR become LF.
std::string normalise_newlines(std::string_view s);

bool starts_with_icase(std::string_view s, std::string_view prefix);

std::string sha256_hex(std::string_view data);

std::string read_text_file(const std::filesystem::path& path);

// Writes via a temp file in the same directory followed by a rename, so a
// reader never observes a half-written file.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

void append_line(const std::filesystem::path& path, std::string_view line);

std::vector<std::string> read_lines(const std::filesystem::path& path);

// Runs fn(0..n-1) on up to `jobs` threads. Rethrows the first exception that
// escaped fn after all workers have joined.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace anonrisk::util
