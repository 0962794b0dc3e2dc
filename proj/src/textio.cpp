#include "hrq/textio.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hrq/error.hpp"

namespace hrq::textio {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t s : shape) {
        n *= s;
    }
    return n;
}

// Lines per array block: one line per row of the innermost dimension.
std::size_t line_count(const std::vector<std::size_t>& shape) {
    if (shape.empty()) {
        return 1;
    }
    std::size_t n = 1;
    for (std::size_t i = 0; i + 1 < shape.size(); ++i) {
        n *= shape[i];
    }
    return n;
}

class Tokenizer {
  public:
    explicit Tokenizer(std::string_view text) : text_(text) {}

    bool next_line(std::string_view& line) {
        if (pos_ >= text_.size()) {
            return false;
        }
        std::size_t end = text_.find('\n', pos_);
        if (end == std::string_view::npos) {
            end = text_.size();
        }
        line = text_.substr(pos_, end - pos_);
        pos_ = end + 1;
        ++line_no_;
        return true;
    }

    std::size_t line_no() const { return line_no_; }

  private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_no_ = 0;
};

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') {
            ++i;
        }
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ') {
            ++i;
        }
        if (i > start) {
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

double parse_double(std::string_view tok, std::size_t line_no) {
    std::string buf(tok);
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size()) {
        throw FormatError("line " + std::to_string(line_no) + ": bad float '" + buf + "'");
    }
    return v;
}

std::int64_t parse_int(std::string_view tok, std::size_t line_no) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw FormatError("line " + std::to_string(line_no) + ": bad integer '" +
                          std::string(tok) + "'");
    }
    return v;
}

} // namespace

void Document::set_meta(std::string key, std::string value) {
    for (auto& [k, v] : meta) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    meta.emplace_back(std::move(key), std::move(value));
}

const std::string* Document::find_meta(std::string_view key) const {
    for (const auto& [k, v] : meta) {
        if (k == key) {
            return &v;
        }
    }
    return nullptr;
}

std::string Document::require_meta(std::string_view key) const {
    const std::string* v = find_meta(key);
    if (v == nullptr) {
        throw FormatError("missing meta field '" + std::string(key) + "'");
    }
    return *v;
}

std::int64_t Document::meta_int(std::string_view key) const {
    return parse_int(require_meta(key), 0);
}

double Document::meta_double(std::string_view key) const {
    return parse_double(require_meta(key), 0);
}

const FloatArray& Document::require_array(std::string_view name) const {
    for (const auto& a : arrays) {
        if (a.name == name) {
            return a;
        }
    }
    throw FormatError("missing array '" + std::string(name) + "'");
}

const IntArray& Document::require_iarray(std::string_view name) const {
    for (const auto& a : iarrays) {
        if (a.name == name) {
            return a;
        }
    }
    throw FormatError("missing integer array '" + std::string(name) + "'");
}

std::string format_double(double v) {
    // 17 significant digits round-trip any finite IEEE-754 double exactly.
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string to_string(const Document& doc) {
    std::ostringstream out;
    out << "hrq-text " << doc.version << "\n";
    out << "kind " << doc.kind << "\n";
    for (const auto& [k, v] : doc.meta) {
        out << "meta " << k << " " << v << "\n";
    }
    for (const auto& a : doc.arrays) {
        out << "array " << a.name << " " << a.shape.size();
        for (std::size_t s : a.shape) {
            out << " " << s;
        }
        out << "\n";
        const std::size_t rows = line_count(a.shape);
        const std::size_t row_len = rows == 0 ? 0 : a.data.size() / rows;
        std::size_t idx = 0;
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < row_len; ++c, ++idx) {
                if (c > 0) {
                    out << " ";
                }
                out << format_double(a.data[idx]);
            }
            out << "\n";
        }
    }
    for (const auto& a : doc.iarrays) {
        out << "iarray " << a.name << " " << a.shape.size();
        for (std::size_t s : a.shape) {
            out << " " << s;
        }
        out << "\n";
        const std::size_t rows = line_count(a.shape);
        const std::size_t row_len = rows == 0 ? 0 : a.data.size() / rows;
        std::size_t idx = 0;
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < row_len; ++c, ++idx) {
                if (c > 0) {
                    out << " ";
                }
                out << a.data[idx];
            }
            out << "\n";
        }
    }
    out << "end\n";
    return out.str();
}

Document parse(std::string_view text) {
    Tokenizer tok(text);
    std::string_view line;

    if (!tok.next_line(line)) {
        throw FormatError("empty document");
    }
    auto header = split_ws(line);
    if (header.size() != 2 || header[0] != "hrq-text") {
        throw FormatError("not an hrq-text document");
    }
    Document doc;
    doc.version = static_cast<int>(parse_int(header[1], tok.line_no()));
    if (doc.version != kFormatVersion) {
        throw FormatError("unsupported format version " + std::to_string(doc.version));
    }

    if (!tok.next_line(line)) {
        throw FormatError("missing kind");
    }
    auto kind = split_ws(line);
    if (kind.size() != 2 || kind[0] != "kind") {
        throw FormatError("missing kind");
    }
    doc.kind = std::string(kind[1]);

    bool saw_end = false;
    while (tok.next_line(line)) {
        auto fields = split_ws(line);
        if (fields.empty()) {
            continue;
        }
        if (fields[0] == "end") {
            saw_end = true;
            break;
        }
        if (fields[0] == "meta") {
            if (fields.size() < 2) {
                throw FormatError("line " + std::to_string(tok.line_no()) + ": bad meta");
            }
            // Value may contain spaces; re-join everything after the key.
            std::string value;
            for (std::size_t i = 2; i < fields.size(); ++i) {
                if (i > 2) {
                    value += ' ';
                }
                value += std::string(fields[i]);
            }
            doc.meta.emplace_back(std::string(fields[1]), value);
            continue;
        }
        if (fields[0] == "array" || fields[0] == "iarray") {
            const bool integral = fields[0] == "iarray";
            if (fields.size() < 3) {
                throw FormatError("line " + std::to_string(tok.line_no()) + ": bad array header");
            }
            std::string name(fields[1]);
            std::size_t rank = static_cast<std::size_t>(parse_int(fields[2], tok.line_no()));
            if (fields.size() != 3 + rank) {
                throw FormatError("line " + std::to_string(tok.line_no()) + ": bad array header");
            }
            std::vector<std::size_t> shape(rank);
            for (std::size_t i = 0; i < rank; ++i) {
                shape[i] = static_cast<std::size_t>(parse_int(fields[3 + i], tok.line_no()));
            }
            std::size_t need = element_count(shape);
            std::vector<double> fdata;
            std::vector<std::int64_t> idata;
            if (integral) {
                idata.reserve(need);
            } else {
                fdata.reserve(need);
            }
            std::size_t got = 0;
            while (got < need) {
                if (!tok.next_line(line)) {
                    throw FormatError("array '" + name + "' truncated");
                }
                for (auto t : split_ws(line)) {
                    if (got >= need) {
                        throw FormatError("array '" + name + "' has extra values");
                    }
                    if (integral) {
                        idata.push_back(parse_int(t, tok.line_no()));
                    } else {
                        fdata.push_back(parse_double(t, tok.line_no()));
                    }
                    ++got;
                }
            }
            if (integral) {
                doc.iarrays.push_back({std::move(name), std::move(shape), std::move(idata)});
            } else {
                doc.arrays.push_back({std::move(name), std::move(shape), std::move(fdata)});
            }
            continue;
        }
        throw FormatError("line " + std::to_string(tok.line_no()) + ": unknown record '" +
                          std::string(fields[0]) + "'");
    }
    if (!saw_end) {
        throw FormatError("missing end marker");
    }
    return doc;
}

void save(const Document& doc, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw UsageError("cannot open '" + path.string() + "' for writing");
    }
    out << to_string(doc);
    if (!out) {
        throw UsageError("write failed for '" + path.string() + "'");
    }
}

Document load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UsageError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::uint64_t checksum(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace hrq::textio
