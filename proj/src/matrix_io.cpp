#include "perron/matrix_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace perron {

namespace {

struct Token {
    std::string text;
    int line;  // 1-based
    int col;   // 1-based
};

std::vector<Token> tokenize(const std::string& text, char extra_sep = '\0') {
    std::vector<Token> tokens;
    int line = 1, col = 0;
    std::string cur;
    int tok_line = 1, tok_col = 1;
    auto flush = [&]() {
        if (!cur.empty()) {
            tokens.push_back({cur, tok_line, tok_col});
            cur.clear();
        }
    };
    for (char ch : text) {
        ++col;
        if (ch == '\n') {
            flush();
            ++line;
            col = 0;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(ch)) || ch == extra_sep) {
            flush();
            continue;
        }
        if (cur.empty()) {
            tok_line = line;
            tok_col = col;
        }
        cur += ch;
    }
    flush();
    return tokens;
}

double parse_value(const Token& t) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(t.text, &pos);
    } catch (const std::exception&) {
        throw ValidationError("not a number at line " + std::to_string(t.line) +
                              ", column " + std::to_string(t.col) + ": '" + t.text + "'");
    }
    if (pos != t.text.size())
        throw ValidationError("trailing characters at line " + std::to_string(t.line) +
                              ", column " + std::to_string(t.col) + ": '" + t.text + "'");
    return v;
}

NonNegativeMatrix build_checked(int n, const std::vector<double>& values,
                                const std::vector<Token>& positions) {
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double v = values[static_cast<std::size_t>(i) * n + j];
            const Token& t = positions[static_cast<std::size_t>(i) * n + j];
            std::string at = "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                             "), line " + std::to_string(t.line) + ", column " +
                             std::to_string(t.col);
            if (!std::isfinite(v)) throw ValidationError("non-finite entry at " + at);
            if (v < 0.0) throw ValidationError("negative entry at " + at);
        }
    }
    return NonNegativeMatrix(n, values);
}

NonNegativeMatrix parse_plain(const std::string& text) {
    std::vector<Token> tokens = tokenize(text);
    if (tokens.empty()) throw ValidationError("empty matrix file");
    const Token& head = tokens[0];
    double nv = parse_value(head);
    int n = static_cast<int>(nv);
    if (nv != n || n < 1)
        throw ValidationError("first value must be a positive dimension (line " +
                              std::to_string(head.line) + ")");
    std::size_t need = static_cast<std::size_t>(n) * n;
    if (tokens.size() - 1 != need)
        throw ValidationError("expected " + std::to_string(need) + " entries for n=" +
                              std::to_string(n) + ", found " +
                              std::to_string(tokens.size() - 1));
    std::vector<double> values(need);
    std::vector<Token> pos(tokens.begin() + 1, tokens.end());
    for (std::size_t k = 0; k < need; ++k) values[k] = parse_value(pos[k]);
    return build_checked(n, values, pos);
}

NonNegativeMatrix parse_csv(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur)) {
        bool blank = true;
        for (char c : cur)
            if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
        if (!blank) lines.push_back(cur);
    }
    int n = static_cast<int>(lines.size());
    if (n < 1) throw ValidationError("empty matrix file");
    std::vector<double> values;
    std::vector<Token> pos;
    for (int i = 0; i < n; ++i) {
        std::vector<Token> row = tokenize(lines[i], ',');
        for (Token& t : row) t.line = i + 1;
        if (static_cast<int>(row.size()) != n)
            throw ValidationError("line " + std::to_string(i + 1) + " has " +
                                  std::to_string(row.size()) + " fields, expected " +
                                  std::to_string(n) + " (matrix must be square)");
        for (const Token& t : row) {
            values.push_back(parse_value(t));
            pos.push_back(t);
        }
    }
    return build_checked(n, values, pos);
}

NonNegativeMatrix parse_json_matrix(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("JSON parse error: ") + e.what());
    }
    if (!j.is_object() || !j.contains("n") || !j.contains("entries"))
        throw ValidationError("JSON matrix must be an object with 'n' and 'entries'");
    if (!j["n"].is_number_integer() || j["n"].get<long>() < 1)
        throw ValidationError("'n' must be a positive integer");
    int n = j["n"].get<int>();
    const auto& arr = j["entries"];
    if (!arr.is_array() || arr.size() != static_cast<std::size_t>(n) * n)
        throw ValidationError("'entries' must hold exactly n*n numbers (n=" +
                              std::to_string(n) + ")");
    std::vector<double> values;
    values.reserve(arr.size());
    for (std::size_t k = 0; k < arr.size(); ++k) {
        if (!arr[k].is_number())
            throw ValidationError("entry " + std::to_string(k) + " is not a number");
        double v = arr[k].get<double>();
        int r = static_cast<int>(k) / n, c = static_cast<int>(k) % n;
        std::string at = "(" + std::to_string(r + 1) + "," + std::to_string(c + 1) + ")";
        if (!std::isfinite(v)) throw ValidationError("non-finite entry at " + at);
        if (v < 0.0) throw ValidationError("negative entry at " + at);
        values.push_back(v);
    }
    return NonNegativeMatrix(n, std::move(values));
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

NonNegativeMatrix parse_matrix(const std::string& text, MatrixFormat format) {
    switch (format) {
        case MatrixFormat::plain: return parse_plain(text);
        case MatrixFormat::csv: return parse_csv(text);
        case MatrixFormat::json: return parse_json_matrix(text);
    }
    throw ValidationError("unknown matrix format");
}

MatrixFormat matrix_format_from_name(const std::string& name) {
    if (name == "plain") return MatrixFormat::plain;
    if (name == "csv") return MatrixFormat::csv;
    if (name == "json") return MatrixFormat::json;
    throw ValidationError("unknown matrix format '" + name +
                          "' (expected plain, csv or json)");
}

std::string matrix_format_name(MatrixFormat format) {
    switch (format) {
        case MatrixFormat::plain: return "plain";
        case MatrixFormat::csv: return "csv";
        case MatrixFormat::json: return "json";
    }
    return "?";
}

MatrixFile load_matrix_file(const std::string& path, const std::string& format) {
    MatrixFormat f;
    if (!format.empty()) {
        f = matrix_format_from_name(format);
    } else if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
        f = MatrixFormat::csv;
    } else if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        f = MatrixFormat::json;
    } else {
        f = MatrixFormat::plain;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open matrix file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return MatrixFile{path, f, parse_matrix(buf.str(), f)};
}

std::string format_matrix(const NonNegativeMatrix& A, MatrixFormat format) {
    const int n = A.size();
    std::ostringstream os;
    switch (format) {
        case MatrixFormat::plain:
            os << n << "\n";
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) os << (j ? " " : "") << format_double(A(i, j));
                os << "\n";
            }
            return os.str();
        case MatrixFormat::csv:
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) os << (j ? "," : "") << format_double(A(i, j));
                os << "\n";
            }
            return os.str();
        case MatrixFormat::json: {
            nlohmann::json j;
            j["n"] = n;
            j["entries"] = A.entries();
            return j.dump();
        }
    }
    throw ValidationError("unknown matrix format");
}

}  // namespace perron
