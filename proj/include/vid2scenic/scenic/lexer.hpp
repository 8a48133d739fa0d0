#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vid2scenic/scenic/diagnostic.hpp"

namespace vid2scenic::scenic {

enum class TokenKind {
    name,
    number,
    string,
    op,  // punctuation and operators; text holds the spelling
    newline,
    indent,
    dedent,
    end,
};

struct Token {
    TokenKind kind = TokenKind::end;
    std::string text;  // strings: unescaped value
    Span span;
};

struct LexResult {
    std::vector<Token> tokens;
    std::vector<Diagnostic> diagnostics;
};

/// Python-style tokenization: indentation produces indent/dedent tokens,
/// newlines inside brackets are joined, `#` starts a comment. Tabs advance
/// the indentation column to the next multiple of 4. Always ends with
/// `end`, even when diagnostics were produced.
LexResult lex(std::string_view source);

/// Maps byte offsets of one source text to line/column spans.
class LineIndex {
public:
    explicit LineIndex(std::string_view source);

    /// Span for [begin, end), clamped so it stays within the text and
    /// covers at least one byte of a non-empty source.
    Span span(std::size_t begin, std::size_t end) const;

private:
    std::size_t size_ = 0;
    std::vector<std::size_t> line_starts_;
};

/// Spans two spans, from the start of `first` to the end of `last`.
Span join(const Span& first, const Span& last);

}  // namespace vid2scenic::scenic
