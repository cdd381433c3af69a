#pragma once

#include <string>

#include "perron/matrix.hpp"

namespace perron {

enum class MatrixFormat { plain, csv, json };

struct MatrixFile {
    std::string path;
    MatrixFormat format = MatrixFormat::plain;
    NonNegativeMatrix parsed;
};

// plain: first line n, then n whitespace-separated rows of n values.
// csv:   n lines of n comma-separated values (n = line count).
// json:  {"n": <int>, "entries": [<n*n row-major values>]}.
// Parse failures throw ValidationError with a line/column (or entry)
// position in the message.
NonNegativeMatrix parse_matrix(const std::string& text, MatrixFormat format);

// Reads the file; format from `format` or, when empty, the extension
// (.csv, .json, anything else is plain).
MatrixFile load_matrix_file(const std::string& path,
                            const std::string& format = "");

// Exact round-trip serialization (17 significant digits).
std::string format_matrix(const NonNegativeMatrix& A, MatrixFormat format);

MatrixFormat matrix_format_from_name(const std::string& name);
std::string matrix_format_name(MatrixFormat format);

}  // namespace perron
