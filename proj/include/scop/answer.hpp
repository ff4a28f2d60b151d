#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace scop {

enum class AnswerKind { numeric, choice, none };

std::string to_string(AnswerKind kind);
AnswerKind answer_kind_from_string(std::string_view s);

/// A canonical answer token. Distinct surface spellings of the same answer
/// ("240", "240.0", "$240.") collapse to one value so they merge in a vote.
///
/// Canonical numeric form: no thousands separators, no currency symbols, no
/// trailing zeros after the decimal point, no trailing decimal point, and
/// "-0" normalizes to "0". Non-terminating fractions stay in reduced "a/b"
/// form. Anything that is not a number or fraction is kept as an
/// expression string with all whitespace removed.
struct CanonicalAnswer {
    AnswerKind kind = AnswerKind::none;
    std::string value;

    bool operator==(const CanonicalAnswer&) const = default;

    static CanonicalAnswer none() { return {}; }
    static CanonicalAnswer numeric(std::string v) { return {AnswerKind::numeric, std::move(v)}; }
    static CanonicalAnswer choice(char letter) { return {AnswerKind::choice, std::string(1, letter)}; }
};

enum class AnswerFormat { numeric, choice };

/// One numeric-looking token located inside a larger text.
struct NumberToken {
    std::size_t begin = 0;
    std::size_t end = 0;      // one past the last consumed character
    std::string canonical;    // canonical decimal or reduced fraction
};

/// Scan text for number and fraction tokens (decimals with optional commas
/// and currency signs, a/b fractions, \frac{a}{b} LaTeX fractions), in
/// order of appearance.
std::vector<NumberToken> scan_number_tokens(std::string_view text);

/// Canonicalize a raw answer string. Numbers and fractions go to canonical
/// decimal (or reduced a/b when the decimal does not terminate within 12
/// digits); everything else is treated as an expression and returned with
/// all whitespace stripped and any trailing period removed. Returns an
/// empty string only for effectively empty input.
std::string canonicalize_numeric(std::string_view raw);

/// True when the whole string is a single number or fraction (possibly
/// decorated with currency/commas/trailing units).
bool is_numeric_like(std::string_view s);

/// Parse a reasoning text into a canonical answer. Never throws; texts with
/// nothing extractable map to kind none.
CanonicalAnswer extract(std::string_view text, AnswerFormat format);

/// Exact equality on canonical forms. Kind none never equals anything, a
/// numeric/choice kind mismatch compares false and is logged.
bool answers_equal(const CanonicalAnswer& a, const CanonicalAnswer& b);

} // namespace scop
