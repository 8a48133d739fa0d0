#include "vid2scenic/scenic/lexer.hpp"

#include <algorithm>
#include <array>

#include <fmt/format.h>

namespace vid2scenic::scenic {

namespace {

constexpr int kTabWidth = 4;

bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Longest match first.
constexpr std::array<std::string_view, 31> kOperators = {
    "**", "==", "!=", "<=", ">=", "->", "//",
    "(", ")", "[", "]", "{", "}", ",", ":", ".", "=", "<", ">",
    "+", "-", "*", "/", "%", "@", ";", "~", "&", "|", "^", "!",
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src), index_(src) {}

    LexResult run() {
        indents_.push_back(0);
        while (pos_ < src_.size()) {
            if (at_line_start_) {
                if (!handle_indentation()) continue;
            }
            if (pos_ >= src_.size()) break;
            scan_token();
        }
        if (!out_.tokens.empty() && out_.tokens.back().kind != TokenKind::newline &&
            out_.tokens.back().kind != TokenKind::dedent) {
            push(TokenKind::newline, "", pos_, pos_);
        }
        if (depth_ > 0 && !brackets_.empty()) {
            auto open = brackets_.back();
            error(open, open + 1, "unclosed bracket", std::nullopt);
        }
        while (indents_.size() > 1) {
            indents_.pop_back();
            push(TokenKind::dedent, "", pos_, pos_);
        }
        push(TokenKind::end, "", pos_, pos_);
        return std::move(out_);
    }

private:
    // Returns false when the line was blank or comment-only and fully consumed.
    bool handle_indentation() {
        int column = 0;
        std::size_t p = pos_;
        while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\f')) {
            if (src_[p] == '\t') column = (column / kTabWidth + 1) * kTabWidth;
            else if (src_[p] == ' ') ++column;
            ++p;
        }
        if (p >= src_.size() || src_[p] == '\n' || src_[p] == '\r' || src_[p] == '#') {
            // blank or comment-only line
            while (p < src_.size() && src_[p] != '\n') ++p;
            advance_to(p);
            if (pos_ < src_.size()) newline_char();
            return false;
        }
        advance_to(p);
        at_line_start_ = false;
        if (column > indents_.back()) {
            indents_.push_back(column);
            push(TokenKind::indent, "", line_begin_, pos_);
        } else {
            while (column < indents_.back()) {
                indents_.pop_back();
                push(TokenKind::dedent, "", pos_, pos_);
            }
            if (column != indents_.back()) {
                error(line_begin_, std::max(pos_, line_begin_ + 1),
                      "unindent does not match any outer indentation level", std::nullopt);
                indents_.push_back(column);
            }
        }
        return true;
    }

    void scan_token() {
        char c = src_[pos_];
        if (c == ' ' || c == '\t' || c == '\f' || c == '\r') {
            advance(1);
            return;
        }
        if (c == '#') {
            while (pos_ < src_.size() && src_[pos_] != '\n') advance(1);
            return;
        }
        if (c == '\\' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') {
            advance(1);
            newline_char();
            at_line_start_ = false;
            return;
        }
        if (c == '\n') {
            if (depth_ == 0) push(TokenKind::newline, "", pos_, pos_ + 1);
            newline_char();
            if (depth_ > 0) at_line_start_ = false;
            return;
        }
        if (is_ident_start(c)) {
            std::size_t start = pos_;
            while (pos_ < src_.size() && is_ident_char(src_[pos_])) advance(1);
            push(TokenKind::name, std::string(src_.substr(start, pos_ - start)), start, pos_);
            return;
        }
        if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
            scan_number();
            return;
        }
        if (c == '\'' || c == '"') {
            scan_string(c);
            return;
        }
        for (auto op : kOperators) {
            if (src_.substr(pos_, op.size()) == op) {
                std::size_t start = pos_;
                advance(op.size());
                if (op == "(" || op == "[" || op == "{") {
                    ++depth_;
                    brackets_.push_back(start);
                } else if (op == ")" || op == "]" || op == "}") {
                    if (depth_ == 0) {
                        error(start, pos_, fmt::format("unmatched '{}'", op), std::nullopt);
                        return;
                    }
                    --depth_;
                    brackets_.pop_back();
                }
                push(TokenKind::op, std::string(op), start, pos_);
                return;
            }
        }
        // Unknown byte; swallow a whole UTF-8 sequence so the span is a
        // complete character.
        std::size_t start = pos_;
        std::size_t len = 1;
        auto u = static_cast<unsigned char>(c);
        if (u >= 0xF0) len = 4;
        else if (u >= 0xE0) len = 3;
        else if (u >= 0xC0) len = 2;
        len = std::min(len, src_.size() - pos_);
        advance(len);
        error(start, pos_, fmt::format("unexpected character '{}'", src_.substr(start, len)),
              std::nullopt);
    }

    void scan_number() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && (is_digit(src_[pos_]) || src_[pos_] == '_')) advance(1);
        if (pos_ < src_.size() && src_[pos_] == '.') {
            advance(1);
            while (pos_ < src_.size() && is_digit(src_[pos_])) advance(1);
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_;
            advance(1);
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance(1);
            if (pos_ < src_.size() && is_digit(src_[pos_])) {
                while (pos_ < src_.size() && is_digit(src_[pos_])) advance(1);
            } else {
                rewind_to(save);
            }
        }
        if (pos_ < src_.size() && is_ident_start(src_[pos_])) {
            std::size_t bad = pos_;
            while (pos_ < src_.size() && is_ident_char(src_[pos_])) advance(1);
            error(start, pos_,
                  fmt::format("invalid number literal '{}'", src_.substr(start, pos_ - start)),
                  bad > start ? std::optional<std::string>("separate the number and the name")
                              : std::nullopt);
            return;
        }
        push(TokenKind::number, std::string(src_.substr(start, pos_ - start)), start, pos_);
    }

    void scan_string(char quote) {
        std::size_t start = pos_;
        advance(1);
        std::string value;
        while (pos_ < src_.size() && src_[pos_] != quote) {
            char c = src_[pos_];
            if (c == '\n') break;
            if (c == '\\' && pos_ + 1 < src_.size()) {
                char e = src_[pos_ + 1];
                switch (e) {
                    case 'n': value += '\n'; break;
                    case 't': value += '\t'; break;
                    case '\\': value += '\\'; break;
                    case '\'': value += '\''; break;
                    case '"': value += '"'; break;
                    default: value += '\\'; value += e; break;
                }
                advance(2);
                continue;
            }
            value += c;
            advance(1);
        }
        if (pos_ >= src_.size() || src_[pos_] != quote) {
            error(start, pos_, "unterminated string literal", std::string("close the string with ") + quote);
            return;
        }
        advance(1);
        push(TokenKind::string, std::move(value), start, pos_);
    }

    void newline_char() {
        ++pos_;
        line_begin_ = pos_;
        at_line_start_ = depth_ == 0;
    }

    void advance(std::size_t n) { pos_ += n; }

    void advance_to(std::size_t p) { advance(p - pos_); }

    void rewind_to(std::size_t p) { pos_ = p; }

    void push(TokenKind kind, std::string text, std::size_t begin, std::size_t end) {
        out_.tokens.push_back(Token{kind, std::move(text), index_.span(begin, end)});
    }

    void error(std::size_t begin, std::size_t end, std::string message,
               std::optional<std::string> hint) {
        out_.diagnostics.push_back(Diagnostic{Severity::error, std::string(code::lex),
                                              index_.span(begin, end), std::move(message),
                                              std::move(hint)});
    }

    std::string_view src_;
    LineIndex index_;
    std::size_t pos_ = 0;
    std::size_t line_begin_ = 0;
    bool at_line_start_ = true;
    int depth_ = 0;
    std::vector<std::size_t> brackets_;
    std::vector<int> indents_;
    LexResult out_;
};

}  // namespace

LineIndex::LineIndex(std::string_view source) : size_(source.size()) {
    line_starts_.push_back(0);
    for (std::size_t i = 0; i < source.size(); ++i) {
        if (source[i] == '\n') line_starts_.push_back(i + 1);
    }
}

Span LineIndex::span(std::size_t begin, std::size_t end) const {
    if (size_ == 0) return Span{0, 0, 1, 1, 1, 1};
    begin = std::min(begin, size_ - 1);
    end = std::clamp(end, begin + 1, size_);
    auto locate = [this](std::size_t offset) {
        auto it = std::upper_bound(line_starts_.begin(), line_starts_.end(), offset);
        auto line = static_cast<std::size_t>(it - line_starts_.begin());
        return std::pair{static_cast<int>(line),
                         static_cast<int>(offset - line_starts_[line - 1]) + 1};
    };
    auto [line, col] = locate(begin);
    auto [end_line, end_col] = locate(end - 1);
    return Span{begin, end, line, col, end_line, end_col};
}

Span join(const Span& first, const Span& last) {
    return Span{first.begin, std::max(first.end, last.end), first.line, first.col,
                last.end_line, last.end_col};
}

LexResult lex(std::string_view source) { return Lexer(source).run(); }

}  // namespace vid2scenic::scenic
