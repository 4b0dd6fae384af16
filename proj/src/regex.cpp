#include "modelgate/regex.hpp"

#include <algorithm>
#include <memory>

#include "modelgate/json.hpp"

namespace modelgate {

namespace {

constexpr std::size_t kMaxProgram = 50000;
constexpr int kMaxRepeat = 1000;
constexpr char32_t kMaxCodePoint = 0x10FFFF;

using Ranges = std::vector<Pattern::Range>;

struct Node {
    enum class Kind { Empty, Set, Concat, Alt, Repeat, Begin, End } kind;
    Ranges set;
    std::vector<std::unique_ptr<Node>> children;
    int min = 0;
    int max = -1;  // -1 = unbounded

    explicit Node(Kind k) : kind(k) {}
};

using NodePtr = std::unique_ptr<Node>;

Ranges normalize(Ranges r) {
    std::sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.lo < b.lo; });
    Ranges out;
    for (const auto& x : r) {
        if (!out.empty() && x.lo <= out.back().hi + 1) {
            out.back().hi = std::max(out.back().hi, x.hi);
        } else {
            out.push_back(x);
        }
    }
    return out;
}

Ranges complement(const Ranges& in) {
    Ranges sorted = normalize(in);
    Ranges out;
    char32_t next = 0;
    for (const auto& r : sorted) {
        if (r.lo > next) out.push_back({next, r.lo - 1});
        next = r.hi + 1;
    }
    if (next <= kMaxCodePoint) out.push_back({next, kMaxCodePoint});
    return out;
}

Ranges digit_class() { return {{'0', '9'}}; }
Ranges word_class() { return {{'0', '9'}, {'A', 'Z'}, {'_', '_'}, {'a', 'z'}}; }
Ranges space_class() {
    return {{'\t', '\r'}, {' ', ' '}, {0xA0, 0xA0}, {0x1680, 0x1680}, {0x2000, 0x200A},
            {0x2028, 0x2029}, {0x202F, 0x202F}, {0x205F, 0x205F}, {0x3000, 0x3000}, {0xFEFF, 0xFEFF}};
}

}  // namespace

class PatternCompiler {
  public:
    explicit PatternCompiler(std::string_view source) : text_(utf8_decode(source)) {}

    NodePtr parse() {
        NodePtr n = parse_alt();
        if (pos_ != text_.size()) fail(text_[pos_] == ')' ? "unbalanced ')'" : "unexpected character");
        return n;
    }

    void emit_program(const Node& root, Pattern& out) {
        pattern_ = &out;
        emit(root);
        push({Pattern::Op::Match});
    }

  private:
    [[noreturn]] void fail(const std::string& what) const {
        throw PatternError(what + " at offset " + std::to_string(pos_));
    }

    bool at_end() const { return pos_ >= text_.size(); }
    char32_t peek() const { return at_end() ? 0 : text_[pos_]; }

    NodePtr parse_alt() {
        auto first = parse_concat();
        if (peek() != '|') return first;
        auto alt = std::make_unique<Node>(Node::Kind::Alt);
        alt->children.push_back(std::move(first));
        while (peek() == '|') {
            ++pos_;
            alt->children.push_back(parse_concat());
        }
        return alt;
    }

    NodePtr parse_concat() {
        auto cat = std::make_unique<Node>(Node::Kind::Concat);
        while (!at_end() && peek() != '|' && peek() != ')') cat->children.push_back(parse_repeat());
        return cat;
    }

    bool parse_int(int& out) {
        const std::size_t start = pos_;
        long v = 0;
        while (!at_end() && peek() >= '0' && peek() <= '9') {
            v = v * 10 + static_cast<long>(peek() - '0');
            if (v > kMaxRepeat) fail("repetition bound too large");
            ++pos_;
        }
        out = static_cast<int>(v);
        return pos_ > start;
    }

    NodePtr parse_repeat() {
        NodePtr atom = parse_atom();
        while (!at_end()) {
            int min = 0, max = -1;
            const char32_t c = peek();
            if (c == '*') {
                ++pos_;
            } else if (c == '+') {
                min = 1;
                ++pos_;
            } else if (c == '?') {
                max = 1;
                ++pos_;
            } else if (c == '{') {
                ++pos_;
                if (!parse_int(min)) fail("malformed repetition");
                max = min;
                if (peek() == ',') {
                    ++pos_;
                    max = -1;
                    int m = 0;
                    if (parse_int(m)) max = m;
                }
                if (peek() != '}') fail("malformed repetition");
                ++pos_;
                if (max >= 0 && max < min) fail("repetition bounds out of order");
            } else {
                break;
            }
            if (atom->kind == Node::Kind::Begin || atom->kind == Node::Kind::End) fail("nothing to repeat");
            if (peek() == '?') ++pos_;  // lazy suffix: irrelevant for match existence
            auto rep = std::make_unique<Node>(Node::Kind::Repeat);
            rep->min = min;
            rep->max = max;
            rep->children.push_back(std::move(atom));
            atom = std::move(rep);
        }
        return atom;
    }

    NodePtr make_set(Ranges r) {
        auto n = std::make_unique<Node>(Node::Kind::Set);
        n->set = normalize(std::move(r));
        return n;
    }

    // Escape inside or outside a class. Returns the ranges it denotes.
    Ranges parse_escape() {
        if (at_end()) fail("trailing backslash");
        const char32_t c = text_[pos_++];
        switch (c) {
            case 'd': return digit_class();
            case 'D': return complement(digit_class());
            case 'w': return word_class();
            case 'W': return complement(word_class());
            case 's': return space_class();
            case 'S': return complement(space_class());
            case 'n': return {{'\n', '\n'}};
            case 't': return {{'\t', '\t'}};
            case 'r': return {{'\r', '\r'}};
            case 'f': return {{'\f', '\f'}};
            case 'v': return {{'\v', '\v'}};
            case '0': return {{0, 0}};
            case 'u': {
                char32_t v = 0;
                for (int i = 0; i < 4; ++i) {
                    if (at_end()) fail("truncated \\u escape");
                    const char32_t h = text_[pos_++];
                    v <<= 4;
                    if (h >= '0' && h <= '9') {
                        v |= h - '0';
                    } else if (h >= 'a' && h <= 'f') {
                        v |= h - 'a' + 10;
                    } else if (h >= 'A' && h <= 'F') {
                        v |= h - 'A' + 10;
                    } else {
                        fail("invalid \\u escape");
                    }
                }
                return {{v, v}};
            }
            default: break;
        }
        if (c >= '1' && c <= '9') fail("backreferences are not supported");
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) fail("unsupported escape");
        return {{c, c}};
    }

    NodePtr parse_class() {
        bool negate = false;
        if (peek() == '^') {
            negate = true;
            ++pos_;
        }
        Ranges ranges;
        bool first = true;
        while (true) {
            if (at_end()) fail("unterminated character class");
            char32_t c = text_[pos_];
            if (c == ']' && !first) {
                ++pos_;
                break;
            }
            first = false;
            ++pos_;
            Ranges item;
            if (c == '\\') {
                item = parse_escape();
            } else {
                item = {{c, c}};
            }
            // Range a-b, only between single characters.
            if (item.size() == 1 && item[0].lo == item[0].hi && peek() == '-' && pos_ + 1 < text_.size() &&
                text_[pos_ + 1] != ']') {
                ++pos_;
                char32_t hi = text_[pos_++];
                if (hi == '\\') {
                    Ranges e = parse_escape();
                    if (e.size() != 1 || e[0].lo != e[0].hi) fail("invalid class range");
                    hi = e[0].lo;
                }
                if (hi < item[0].lo) fail("class range out of order");
                item = {{item[0].lo, hi}};
            }
            ranges.insert(ranges.end(), item.begin(), item.end());
        }
        return make_set(negate ? complement(ranges) : ranges);
    }

    NodePtr parse_atom() {
        if (at_end()) fail("unexpected end of pattern");
        const char32_t c = text_[pos_++];
        switch (c) {
            case '(': {
                if (peek() == '?') {
                    if (pos_ + 1 < text_.size() && text_[pos_ + 1] == ':') {
                        pos_ += 2;
                    } else {
                        fail("lookaround and named groups are not supported");
                    }
                }
                NodePtr inner = parse_alt();
                if (peek() != ')') fail("missing ')'");
                ++pos_;
                return inner;
            }
            case ')': fail("unbalanced ')'");
            case '[': return parse_class();
            case '.': return make_set(complement({{'\n', '\n'}, {'\r', '\r'}, {0x2028, 0x2029}}));
            case '^': return std::make_unique<Node>(Node::Kind::Begin);
            case '$': return std::make_unique<Node>(Node::Kind::End);
            case '\\': {
                if (peek() == 'b' || peek() == 'B') fail("word boundaries are not supported");
                return make_set(parse_escape());
            }
            case '*':
            case '+':
            case '?':
            case '{': fail("nothing to repeat");
            default: return make_set({{c, c}});
        }
    }

    std::uint32_t here() const { return static_cast<std::uint32_t>(pattern_->program_.size()); }

    std::uint32_t push(Pattern::Inst inst) {
        if (pattern_->program_.size() >= kMaxProgram) throw PatternError("pattern too large after expansion");
        pattern_->program_.push_back(inst);
        return here() - 1;
    }

    void emit(const Node& n) {
        switch (n.kind) {
            case Node::Kind::Empty: return;
            case Node::Kind::Begin: push({Pattern::Op::Begin}); return;
            case Node::Kind::End: push({Pattern::Op::End}); return;
            case Node::Kind::Set: {
                const auto first = static_cast<std::uint32_t>(pattern_->ranges_.size());
                pattern_->ranges_.insert(pattern_->ranges_.end(), n.set.begin(), n.set.end());
                push({Pattern::Op::Set, first, static_cast<std::uint32_t>(n.set.size())});
                return;
            }
            case Node::Kind::Concat:
                for (const auto& c : n.children) emit(*c);
                return;
            case Node::Kind::Alt: {
                std::vector<std::uint32_t> jumps;
                for (std::size_t i = 0; i < n.children.size(); ++i) {
                    if (i + 1 < n.children.size()) {
                        const auto split = push({Pattern::Op::Split});
                        pattern_->program_[split].x = here();
                        emit(*n.children[i]);
                        jumps.push_back(push({Pattern::Op::Jump}));
                        pattern_->program_[split].y = here();
                    } else {
                        emit(*n.children[i]);
                    }
                }
                for (auto j : jumps) pattern_->program_[j].x = here();
                return;
            }
            case Node::Kind::Repeat: {
                const Node& body = *n.children.front();
                for (int i = 0; i < n.min; ++i) emit(body);
                if (n.max < 0) {
                    const auto split = push({Pattern::Op::Split});
                    pattern_->program_[split].x = here();
                    emit(body);
                    const auto j = push({Pattern::Op::Jump});
                    pattern_->program_[j].x = split;
                    pattern_->program_[split].y = here();
                    return;
                }
                std::vector<std::uint32_t> splits;
                for (int i = n.min; i < n.max; ++i) {
                    const auto split = push({Pattern::Op::Split});
                    pattern_->program_[split].x = here();
                    splits.push_back(split);
                    emit(body);
                }
                for (auto s : splits) pattern_->program_[s].y = here();
                return;
            }
        }
    }

    std::u32string text_;
    std::size_t pos_ = 0;
    Pattern* pattern_ = nullptr;
};

Pattern Pattern::compile(std::string_view source) {
    Pattern p;
    p.source_ = std::string(source);
    PatternCompiler compiler(source);
    NodePtr root = compiler.parse();
    compiler.emit_program(*root, p);
    return p;
}

bool Pattern::search(std::string_view utf8_text) const {
    const std::u32string text = utf8_decode(utf8_text);
    const std::size_t n = program_.size();
    std::vector<std::uint32_t> current, next;
    std::vector<std::size_t> mark(n, static_cast<std::size_t>(-1));
    std::vector<std::uint32_t> stack;

    // Follows epsilon edges from pc at text position `at`, collecting
    // character-consuming instructions. Returns true if Match is reached.
    auto add = [&](std::vector<std::uint32_t>& list, std::uint32_t pc, std::size_t at) {
        stack.clear();
        stack.push_back(pc);
        while (!stack.empty()) {
            const auto p = stack.back();
            stack.pop_back();
            if (mark[p] == at) continue;
            mark[p] = at;
            const Inst& inst = program_[p];
            switch (inst.op) {
                case Op::Match: return true;
                case Op::Set: list.push_back(p); break;
                case Op::Jump: stack.push_back(inst.x); break;
                case Op::Split:
                    stack.push_back(inst.y);
                    stack.push_back(inst.x);
                    break;
                case Op::Begin:
                    if (at == 0) stack.push_back(p + 1);
                    break;
                case Op::End:
                    if (at == text.size()) stack.push_back(p + 1);
                    break;
            }
        }
        return false;
    };

    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (add(current, 0, i)) return true;
        if (i == text.size()) break;
        next.clear();
        const char32_t c = text[i];
        for (const auto pc : current) {
            const Inst& inst = program_[pc];
            const Range* r = ranges_.data() + inst.x;
            const bool hit = std::any_of(r, r + inst.y, [c](const Range& rg) { return c >= rg.lo && c <= rg.hi; });
            if (hit && add(next, pc + 1, i + 1)) return true;
        }
        std::swap(current, next);
    }
    return false;
}

}  // namespace modelgate
