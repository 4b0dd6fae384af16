#include "modelgate/path.hpp"

#include <algorithm>

namespace modelgate {

namespace {

bool is_index_token(std::string_view t) {
    if (t.empty() || t.size() > 18) return false;
    if (!std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) return false;
    return t.size() == 1 || t[0] != '0';
}

}  // namespace

bool PathExpr::has_wildcard() const { return wildcard_count() > 0; }

std::size_t PathExpr::wildcard_count() const {
    return static_cast<std::size_t>(std::count_if(segments_.begin(), segments_.end(), [](const PathSegment& s) {
        return std::holds_alternative<Wildcard>(s);
    }));
}

PathExpr PathExpr::child(std::string key) const {
    PathExpr p = *this;
    p.segments_.emplace_back(std::move(key));
    return p;
}

PathExpr PathExpr::child(std::size_t index) const {
    PathExpr p = *this;
    p.segments_.emplace_back(index);
    return p;
}

PathExpr PathExpr::wildcard() const {
    PathExpr p = *this;
    p.segments_.emplace_back(Wildcard{});
    return p;
}

PathExpr PathExpr::parent() const {
    PathExpr p = *this;
    if (!p.segments_.empty()) p.segments_.pop_back();
    return p;
}

std::string escape_path_token(std::string_view token) {
    std::string out;
    out.reserve(token.size());
    for (char c : token) {
        if (c == '~') {
            out += "~0";
        } else if (c == '/') {
            out += "~1";
        } else {
            out += c;
        }
    }
    return out;
}

std::string PathExpr::to_string() const {
    std::string out;
    for (const auto& seg : segments_) {
        out += '/';
        if (const auto* key = std::get_if<std::string>(&seg)) {
            out += escape_path_token(*key);
        } else if (const auto* idx = std::get_if<std::size_t>(&seg)) {
            out += std::to_string(*idx);
        } else {
            out += '*';
        }
    }
    return out;
}

PathExpr parse_path(std::string_view text) {
    std::vector<PathSegment> segments;
    if (text.empty()) return PathExpr{};
    if (text.front() != '/') throw PathSyntaxError("path must start with '/'", 0);
    std::size_t pos = 1;
    while (true) {
        const std::size_t end = std::min(text.find('/', pos), text.size());
        const std::string_view raw = text.substr(pos, end - pos);
        if (raw.empty()) throw PathSyntaxError("empty path segment", pos);
        std::string token;
        token.reserve(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (raw[i] != '~') {
                token += raw[i];
                continue;
            }
            if (i + 1 >= raw.size() || (raw[i + 1] != '0' && raw[i + 1] != '1'))
                throw PathSyntaxError("malformed '~' escape", pos + i);
            token += raw[i + 1] == '0' ? '~' : '/';
            ++i;
        }
        if (raw == "*") {
            segments.emplace_back(Wildcard{});
        } else if (is_index_token(raw)) {
            segments.emplace_back(static_cast<std::size_t>(std::stoull(token)));
        } else {
            segments.emplace_back(std::move(token));
        }
        if (end == text.size()) break;
        pos = end + 1;
    }
    return PathExpr(std::move(segments));
}

}  // namespace modelgate
