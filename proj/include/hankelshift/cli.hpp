#pragma once

// Command-line front end: input files, mode selection and report assembly.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hankelshift::cli {

enum class Kind { weights, moments, measure };

/// A numeric value as written in the input: a "p/q" string or a JSON/CSV number.
struct Number {
  std::string text;
  bool quoted = false;
};

struct SequenceFile {
  Kind kind = Kind::moments;
  std::vector<Number> values;     // weights or moments
  std::vector<Number> atoms;      // measure
  std::vector<Number> densities;  // measure
  std::optional<bool> exact;
  bool squared = false;           // weights given as alpha_n^2
  std::size_t horizon = 16;       // measure: moments gamma_0..gamma_horizon
  bool quoted = false;            // values are "p/q" strings (all or nothing)
};

/// Parses a JSON sequence document, or a CSV list of float moments when `csv` is set.
/// Throws InputError; JSON syntax errors carry line and column.
SequenceFile parse_sequence_text(std::string_view text, bool csv);

/// Reads and parses a file; ".csv" files are CSV, everything else JSON.
SequenceFile load_sequence_file(const std::string& path, std::string* raw = nullptr);

/// 64-bit FNV-1a of the bytes.
std::uint64_t fnv1a(std::string_view bytes);

/// Runs one command; returns the process exit code (0, 2, 3 or 4).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hankelshift::cli
