#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <zlib.h>

#include "perivec/text.hpp"

namespace perivec {

// Shortest round-trip decimal text for a double; keeps every emitted file
// deterministic across runs and platforms.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const char* what) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error(std::string("bad ") + what + ": '" + std::string(s) + "'");
    return v;
}

inline long long parse_int(std::string_view s, const char* what) {
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error(std::string("bad ") + what + ": '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

// Calls fn(line, line_number) for every line of a text file. Files ending in
// .gz are decompressed on the fly. Strips trailing \r and the final empty
// line after a trailing newline.
inline void for_each_line(const std::string& path,
                          const std::function<void(std::string_view, std::size_t)>& fn) {
    const bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
    std::size_t lineno = 0;
    auto emit = [&](std::string& line) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        fn(line, lineno);
    };
    if (gz) {
        gzFile f = gzopen(path.c_str(), "rb");
        if (!f) throw std::runtime_error("cannot open " + path);
        std::string line;
        char buf[1 << 16];
        bool saw_any = false;
        while (true) {
            int n = gzread(f, buf, sizeof(buf));
            if (n < 0) { gzclose(f); throw std::runtime_error("gzip read error in " + path); }
            if (n == 0) break;
            saw_any = true;
            for (int i = 0; i < n; ++i) {
                if (buf[i] == '\n') emit(line), line.clear();
                else line.push_back(buf[i]);
            }
        }
        gzclose(f);
        if (!line.empty() || (saw_any && lineno == 0)) emit(line);
    } else {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot open " + path);
        std::string line;
        while (std::getline(f, line)) emit(line);
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline bool has_gz_suffix(std::string_view path) {
    return path.size() > 3 && path.substr(path.size() - 3) == ".gz";
}

inline void write_file(const std::string& path, std::string_view content) {
    if (has_gz_suffix(path)) {
        gzFile gz = gzopen(path.c_str(), "wb");
        if (!gz) throw std::runtime_error("cannot write " + path);
        std::size_t done = 0;
        while (done < content.size()) {
            const auto chunk = static_cast<unsigned>(
                std::min<std::size_t>(content.size() - done, 1u << 20));
            if (gzwrite(gz, content.data() + done, chunk) != static_cast<int>(chunk)) {
                gzclose(gz);
                throw std::runtime_error("short write to " + path);
            }
            done += chunk;
        }
        gzclose(gz);
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("short write to " + path);
}

// Content hash used for stage caching; hex string of fnv1a64 over the bytes.
inline std::string content_hash(std::string_view bytes) {
    static const char* hex = "0123456789abcdef";
    std::uint64_t h = fnv1a64(bytes);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) { out[static_cast<std::size_t>(i)] = hex[h & 0xf]; h >>= 4; }
    return out;
}

inline std::string file_hash(const std::string& path) { return content_hash(read_file(path)); }

} // namespace perivec
