#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "dyad/coefficients.hpp"
#include "dyad/haar.hpp"

namespace dyad {

/// %.17g float formatting shared by every artifact; round-trips doubles and
/// keeps reports byte-stable.
inline std::string formatDouble(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Minimal JSON writer with insertion-ordered keys and %.17g numbers, so that
/// reports are byte-identical under a fixed seed.
class JsonWriter {
public:
    JsonWriter& beginObject() { return token("{", true); }
    JsonWriter& endObject() { return close("}"); }
    JsonWriter& beginArray() { return token("[", true); }
    JsonWriter& endArray() { return close("]"); }

    JsonWriter& key(const std::string& k) {
        separate();
        out_ << '"' << escape(k) << "\":";
        justOpened_ = true;  // suppress comma before the value
        return *this;
    }

    JsonWriter& value(double v) { return raw(formatDouble(v)); }
    JsonWriter& value(int v) { return raw(std::to_string(v)); }
    JsonWriter& value(std::uint64_t v) { return raw(std::to_string(v)); }
    JsonWriter& value(bool v) { return raw(v ? "true" : "false"); }
    JsonWriter& value(const std::string& s) { return raw("\"" + escape(s) + "\""); }
    JsonWriter& value(const char* s) { return value(std::string(s)); }

    template <typename T>
    JsonWriter& field(const std::string& k, const T& v) {
        key(k);
        return value(v);
    }

    JsonWriter& fieldArray(const std::string& k, const std::vector<double>& vs) {
        key(k);
        beginArray();
        for (double v : vs) value(v);
        return endArray();
    }

    std::string str() const { return out_.str(); }

private:
    JsonWriter& token(const char* t, bool opens) {
        separate();
        out_ << t;
        justOpened_ = opens;
        return *this;
    }
    JsonWriter& close(const char* t) {
        out_ << t;
        justOpened_ = false;
        return *this;
    }
    JsonWriter& raw(const std::string& s) {
        separate();
        out_ << s;
        justOpened_ = false;
        return *this;
    }
    void separate() {
        if (!justOpened_ && out_.tellp() > 0) out_ << ',';
        justOpened_ = false;
    }
    static std::string escape(const std::string& s) {
        std::string r;
        for (char c : s) {
            if (c == '"' || c == '\\') r.push_back('\\');
            r.push_back(c);
        }
        return r;
    }

    std::ostringstream out_;
    bool justOpened_ = true;
};

inline void writeFile(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("writeFile: cannot open " + path);
    os << content;
}

inline std::string readFile(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("readFile: cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

/// RFC-4180 CSV with CRLF line endings.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out_ << ',';
            out_ << header[i];
        }
        out_ << "\r\n";
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << "\r\n";
    }
    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

/// Leaf-value CSV (leaf_index, value) used by measures, weights and functions.
inline std::string leafValuesCsv(const std::vector<double>& values) {
    CsvWriter csv({"leaf_index", "value"});
    for (std::size_t i = 0; i < values.size(); ++i)
        csv.row({std::to_string(i), formatDouble(values[i])});
    return csv.str();
}

/// Parse the leaf CSV; diagnostics carry 1-based row numbers.
inline std::vector<double> parseLeafValuesCsv(const std::string& text, std::uint64_t expected) {
    std::vector<double> out(expected, 0.0);
    std::vector<char> seen(expected, 0);
    std::istringstream is(text);
    std::string line;
    int rowNo = 0;
    while (std::getline(is, line)) {
        ++rowNo;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        if (rowNo == 1 && line.rfind("leaf_index", 0) == 0) continue;
        std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw Error("leaf CSV row " + std::to_string(rowNo) + ": expected 'leaf_index,value'");
        try {
            std::size_t idx = std::stoull(line.substr(0, comma));
            double v = std::stod(line.substr(comma + 1));
            if (idx >= expected)
                throw Error("leaf CSV row " + std::to_string(rowNo) + ": leaf index " +
                            std::to_string(idx) + " out of range (leaves: " +
                            std::to_string(expected) + ")");
            out[idx] = v;
            seen[idx] = 1;
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw Error("leaf CSV row " + std::to_string(rowNo) + ": malformed number in '" +
                        line + "'");
        }
    }
    for (std::uint64_t i = 0; i < expected; ++i)
        if (!seen[i]) throw Error("leaf CSV: missing leaf index " + std::to_string(i));
    return out;
}

/// Per-cube CSV (level, idx..., value) for coefficient fields and expansions.
inline std::string cubeValuesCsv(const DyadicTree& tree, const std::vector<double>& perCube) {
    std::vector<std::string> header{"level"};
    for (int i = 0; i < tree.dimension(); ++i) header.push_back("idx" + std::to_string(i));
    header.push_back("value");
    CsvWriter csv(header);
    for (std::uint64_t flat = 0; flat < tree.cubeCount(); ++flat) {
        CubeId q = tree.cubeAt(flat);
        std::vector<std::string> cells{std::to_string(q.level)};
        for (int i = 0; i < tree.dimension(); ++i) cells.push_back(std::to_string(q.idx[i]));
        cells.push_back(formatDouble(perCube[flat]));
        csv.row(cells);
    }
    return csv.str();
}

inline std::vector<double> parseCubeValuesCsv(const DyadicTree& tree, const std::string& text) {
    std::vector<double> out(tree.cubeCount(), 0.0);
    std::istringstream is(text);
    std::string line;
    int rowNo = 0;
    while (std::getline(is, line)) {
        ++rowNo;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        if (rowNo == 1 && line.rfind("level", 0) == 0) continue;
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (true) {
            std::size_t comma = line.find(',', pos);
            cells.push_back(line.substr(pos, comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (cells.size() != static_cast<std::size_t>(tree.dimension()) + 2)
            throw Error("cube CSV row " + std::to_string(rowNo) + ": expected " +
                        std::to_string(tree.dimension() + 2) + " columns");
        try {
            CubeId q;
            q.level = std::stoi(cells[0]);
            if (q.level < 0 || q.level > tree.depth())
                throw Error("cube CSV row " + std::to_string(rowNo) + ": level out of range");
            for (int i = 0; i < tree.dimension(); ++i) {
                auto idx = std::stoull(cells[static_cast<std::size_t>(i) + 1]);
                if (idx >= (std::uint64_t(1) << q.level))
                    throw Error("cube CSV row " + std::to_string(rowNo) + ": index out of range");
                q.idx[i] = static_cast<std::uint32_t>(idx);
            }
            out[tree.flatIndex(q)] = std::stod(cells.back());
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw Error("cube CSV row " + std::to_string(rowNo) + ": malformed value");
        }
    }
    return out;
}

/// Decay profile as JSON: named forms with parameters, plus sampled values of
/// each scalar map for plotting.
inline std::string decayProfileJson(const DecayProfile& p, const std::vector<double>& samples) {
    JsonWriter j;
    j.beginObject();
    auto mapBlock = [&](const char* key, const ScalarMap& m) {
        j.key(key).beginObject();
        j.field("form", m.name());
        j.field("a", m.a);
        j.key("samples").beginArray();
        for (double t : samples) {
            j.beginObject();
            j.field("t", t);
            j.field("value", m(t));
            j.endObject();
        }
        j.endArray();
        j.endObject();
    };
    mapBlock("large_scale", p.largeScale);
    mapBlock("small_scale", p.smallScale);
    mapBlock("center", p.center);
    j.endObject();
    return j.str();
}

/// Row-major float64 dump of a dense leaf-by-leaf matrix.
inline void writeMatrixBinary(const std::string& path, const std::vector<double>& rowMajor) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("writeMatrixBinary: cannot open " + path);
    os.write(reinterpret_cast<const char*>(rowMajor.data()),
             static_cast<std::streamsize>(rowMajor.size() * sizeof(double)));
}

inline std::vector<double> readMatrixBinary(const std::string& path, std::size_t count) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("readMatrixBinary: cannot open " + path);
    std::vector<double> out(count);
    is.read(reinterpret_cast<char*>(out.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(is.gcount()) != count * sizeof(double))
        throw Error("readMatrixBinary: short read from " + path);
    return out;
}

/// Sidecar for a dumped operator matrix.
inline std::string matrixSidecarJson(const DyadicTree& tree, double deltaCap) {
    JsonWriter j;
    j.beginObject();
    j.field("n", tree.dimension());
    j.field("depth", tree.depth());
    j.field("leaves", tree.leafCount());
    j.field("delta_cap", deltaCap);
    j.field("layout", "row-major float64");
    j.endObject();
    return j.str();
}

/// JSON header describing the model (n, L, root box).
inline std::string modelHeaderJson(const DyadicTree& tree) {
    JsonWriter j;
    j.beginObject();
    j.field("n", tree.dimension());
    j.field("depth", tree.depth());
    j.key("root_corner").beginArray();
    for (int i = 0; i < tree.dimension(); ++i) j.value(tree.rootBox().lo[i].toDouble());
    j.endArray();
    j.field("root_side", tree.rootBox().side.toDouble());
    j.endObject();
    return j.str();
}

}  // namespace dyad
