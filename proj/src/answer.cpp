#include "scop/answer.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <numeric>

#include "scop/errors.hpp"
#include "scop/util.hpp"

namespace scop {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_word(char c) { return is_digit(c) || is_alpha(c) || c == '_'; }

// A token may start here only when the previous character cannot extend a
// word or a decimal ("v1.2", "1.2.3" must not shed inner fragments).
bool boundary_before(std::string_view text, std::size_t i) {
    if (i == 0) return true;
    char p = text[i - 1];
    return !is_word(p) && p != '.';
}

bool boundary_after(std::string_view text, std::size_t i) {
    if (i >= text.size()) return true;
    return !is_word(text[i]);
}

// Digits with optional thousands groups; returns plain digits, advances i.
// A comma group only counts when exactly three digits follow and the group
// is not immediately extended by a fourth digit.
std::string read_grouped_digits(std::string_view text, std::size_t& i) {
    std::string digits;
    while (i < text.size() && is_digit(text[i])) digits += text[i++];
    while (!digits.empty() && i + 4 <= text.size() && text[i] == ',' &&
           is_digit(text[i + 1]) && is_digit(text[i + 2]) && is_digit(text[i + 3]) &&
           (i + 4 == text.size() || !is_digit(text[i + 4]))) {
        digits += text[i + 1];
        digits += text[i + 2];
        digits += text[i + 3];
        i += 4;
    }
    return digits;
}

std::string normalize_decimal(bool negative, std::string int_part, std::string frac_part) {
    std::size_t first = int_part.find_first_not_of('0');
    int_part = (first == std::string::npos) ? "0" : int_part.substr(first);
    std::size_t last = frac_part.find_last_not_of('0');
    frac_part = (last == std::string::npos) ? "" : frac_part.substr(0, last + 1);
    std::string out = int_part;
    if (!frac_part.empty()) out += "." + frac_part;
    if (out == "0") return out;
    return negative ? "-" + out : out;
}

// Reduced fraction to canonical form: integer when b divides a, exact
// decimal when the reduced denominator is 2^x * 5^y with at most 12 decimal
// digits, reduced "a/b" otherwise.
std::string fraction_canonical(bool negative, std::uint64_t num, std::uint64_t den) {
    std::uint64_t g = std::gcd(num, den);
    num /= g;
    den /= g;
    if (num == 0) return "0";
    if (den == 1) return (negative ? "-" : "") + std::to_string(num);

    std::uint64_t rest = den;
    int twos = 0, fives = 0;
    while (rest % 2 == 0) { rest /= 2; ++twos; }
    while (rest % 5 == 0) { rest /= 5; ++fives; }
    int digits = std::max(twos, fives);
    if (rest == 1 && digits <= 12) {
        std::uint64_t pow10 = 1;
        for (int k = 0; k < digits; ++k) pow10 *= 10;
        unsigned __int128 scaled = static_cast<unsigned __int128>(num) * (pow10 / den);
        std::uint64_t whole = static_cast<std::uint64_t>(scaled / pow10);
        std::uint64_t frac = static_cast<std::uint64_t>(scaled % pow10);
        std::string frac_str = std::to_string(frac);
        frac_str.insert(0, static_cast<std::size_t>(digits) - frac_str.size(), '0');
        return normalize_decimal(negative, std::to_string(whole), frac_str);
    }
    return (negative ? "-" : "") + std::to_string(num) + "/" + std::to_string(den);
}

bool parse_u64(const std::string& digits, std::uint64_t& out) {
    if (digits.empty() || digits.size() > 18) return false;
    out = 0;
    for (char c : digits) out = out * 10 + static_cast<std::uint64_t>(c - '0');
    return true;
}

// \frac{a}{b}, \dfrac{a}{b}, \tfrac{a}{b} with optional inner spaces.
bool parse_latex_fraction(std::string_view text, std::size_t i, NumberToken& token) {
    std::size_t j = i + 1;
    if (j < text.size() && (text[j] == 'd' || text[j] == 't')) ++j;
    if (text.compare(j, 4, "frac") != 0) return false;
    j += 4;
    auto skip_ws = [&] { while (j < text.size() && (text[j] == ' ' || text[j] == '\t')) ++j; };
    auto read_braced = [&](bool& neg, std::string& digits) {
        skip_ws();
        if (j >= text.size() || text[j] != '{') return false;
        ++j;
        skip_ws();
        neg = false;
        if (j < text.size() && (text[j] == '-' || text[j] == '+')) neg = (text[j++] == '-');
        digits.clear();
        while (j < text.size() && is_digit(text[j])) digits += text[j++];
        skip_ws();
        if (digits.empty() || j >= text.size() || text[j] != '}') return false;
        ++j;
        return true;
    };
    bool num_neg = false, den_neg = false;
    std::string num_digits, den_digits;
    if (!read_braced(num_neg, num_digits) || !read_braced(den_neg, den_digits)) return false;
    std::uint64_t num = 0, den = 0;
    if (!parse_u64(num_digits, num) || !parse_u64(den_digits, den) || den == 0) return false;
    token.begin = i;
    token.end = j;
    token.canonical = fraction_canonical(num_neg != den_neg, num, den);
    return true;
}

// Decimal with optional sign, currency marker, thousands groups and an
// optional /denominator extension when the numerator is a plain integer.
bool parse_number_at(std::string_view text, std::size_t i, NumberToken& token) {
    std::size_t j = i;
    bool negative = false;
    bool saw_sign = false;
    if (j < text.size() && (text[j] == '+' || text[j] == '-')) {
        negative = (text[j] == '-');
        saw_sign = true;
        ++j;
    }
    if (j < text.size() && text[j] == '$') {
        ++j;
        if (!saw_sign && j < text.size() && (text[j] == '+' || text[j] == '-')) {
            negative = (text[j] == '-');
            ++j;
        }
    }
    std::string int_part = read_grouped_digits(text, j);
    bool had_commas = int_part.size() > 0 && text.substr(i, j - i).find(',') != std::string_view::npos;
    std::string frac_part;
    if (j + 1 < text.size() && text[j] == '.' && is_digit(text[j + 1])) {
        ++j;
        while (j < text.size() && is_digit(text[j])) frac_part += text[j++];
    }
    if (int_part.empty() && frac_part.empty()) return false;

    // Fraction extension: integer numerator, plain integer denominator.
    if (frac_part.empty() && !had_commas && !int_part.empty()) {
        std::size_t k = j;
        while (k < text.size() && (text[k] == ' ' || text[k] == '\t')) ++k;
        if (k < text.size() && text[k] == '/') {
            ++k;
            while (k < text.size() && (text[k] == ' ' || text[k] == '\t')) ++k;
            std::string den_digits;
            std::size_t den_end = k;
            while (den_end < text.size() && is_digit(text[den_end])) den_digits += text[den_end++];
            std::uint64_t num = 0, den = 0;
            if (parse_u64(int_part, num) && parse_u64(den_digits, den) && den != 0 &&
                boundary_after(text, den_end)) {
                token.begin = i;
                token.end = den_end;
                token.canonical = fraction_canonical(negative, num, den);
                return true;
            }
        }
    }

    if (!boundary_after(text, j)) return false;
    token.begin = i;
    token.end = j;
    token.canonical = normalize_decimal(negative, int_part, frac_part);
    return true;
}

bool token_may_start(std::string_view text, std::size_t i) {
    char c = text[i];
    if (is_digit(c)) return boundary_before(text, i);
    if (c == '.') return i + 1 < text.size() && is_digit(text[i + 1]) && boundary_before(text, i);
    if (c == '$') return true;
    if (c == '+' || c == '-') {
        if (i > 0 && (is_word(text[i - 1]) || text[i - 1] == ')')) return false;
        return i + 1 < text.size() &&
               (is_digit(text[i + 1]) || text[i + 1] == '$' || text[i + 1] == '.');
    }
    return false;
}

const std::string kAnswerPhrases[] = {"answer is", "answer:", "answer ="};

bool in_skip_set(char c) {
    switch (c) {
        case ' ': case '\t': case ':': case '*': case '#':
        case '(': case '"': case '\'': case '=':
            return true;
        default:
            return false;
    }
}

std::size_t line_end(std::string_view text, std::size_t from) {
    std::size_t eol = text.find('\n', from);
    return eol == std::string_view::npos ? text.size() : eol;
}

// Number starting exactly at `from` after skipping decoration characters.
bool number_at_segment_start(std::string_view text, std::size_t from, std::size_t eol,
                             std::string& canonical) {
    std::size_t p = from;
    while (p < eol && in_skip_set(text[p])) ++p;
    if (p >= eol) return false;
    NumberToken token;
    if (text[p] == '\\' && parse_latex_fraction(text, p, token) && token.end <= eol) {
        canonical = token.canonical;
        return true;
    }
    if (token_may_start(text, p) && parse_number_at(text, p, token) && token.end <= eol) {
        canonical = token.canonical;
        return true;
    }
    return false;
}

std::vector<std::size_t> find_all(const std::string& haystack, const std::string& needle) {
    std::vector<std::size_t> hits;
    std::size_t pos = haystack.find(needle);
    while (pos != std::string::npos) {
        hits.push_back(pos);
        pos = haystack.find(needle, pos + 1);
    }
    return hits;
}

CanonicalAnswer extract_numeric(std::string_view text) {
    std::string lower = to_lower(std::string(text));

    // Stated-answer tier: the last "answer is"-family phrase that yields
    // either a number or a non-empty expression wins.
    std::vector<std::size_t> phrase_ends;
    for (const auto& phrase : kAnswerPhrases)
        for (std::size_t pos : find_all(lower, phrase)) phrase_ends.push_back(pos + phrase.size());
    std::sort(phrase_ends.begin(), phrase_ends.end());
    for (auto it = phrase_ends.rbegin(); it != phrase_ends.rend(); ++it) {
        std::size_t eol = line_end(text, *it);
        std::string canonical;
        if (number_at_segment_start(text, *it, eol, canonical))
            return CanonicalAnswer::numeric(canonical);
        // Expression fallback: rest of the line with whitespace removed.
        std::string rest = strip_whitespace(std::string(text.substr(*it, eol - *it)));
        while (!rest.empty() && rest.back() == '.') rest.pop_back();
        if (!rest.empty() && rest.size() <= 200) return CanonicalAnswer::numeric(rest);
    }

    // Equation tier: number immediately after the last '='.
    for (std::size_t i = text.size(); i-- > 0;) {
        if (text[i] != '=') continue;
        std::string canonical;
        if (number_at_segment_start(text, i + 1, line_end(text, i + 1), canonical))
            return CanonicalAnswer::numeric(canonical);
    }

    // Last standalone number in the whole text.
    auto tokens = scan_number_tokens(text);
    if (!tokens.empty()) return CanonicalAnswer::numeric(tokens.back().canonical);
    return CanonicalAnswer::none();
}

bool is_choice_letter(char c) {
    return (c >= 'A' && c <= 'E') || (c >= 'a' && c <= 'e');
}

char upper_letter(char c) {
    return static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
}

CanonicalAnswer extract_choice(std::string_view text) {
    std::string lower = to_lower(std::string(text));
    std::ptrdiff_t best = -1;
    char letter = 0;
    auto consider = [&](std::size_t pos, char c) {
        if (static_cast<std::ptrdiff_t>(pos) >= best) {
            best = static_cast<std::ptrdiff_t>(pos);
            letter = upper_letter(c);
        }
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '(' && i + 2 < text.size() && is_choice_letter(text[i + 1]) &&
            text[i + 2] == ')')
            consider(i + 1, text[i + 1]);
        if (is_choice_letter(text[i]) && i + 1 < text.size() && text[i + 1] == ')' &&
            (i == 0 || !is_word(text[i - 1])))
            consider(i, text[i]);
    }
    for (const auto& phrase : kAnswerPhrases) {
        for (std::size_t pos : find_all(lower, phrase)) {
            std::size_t p = pos + phrase.size();
            std::size_t eol = line_end(text, p);
            while (p < eol && in_skip_set(text[p])) ++p;
            if (p < eol && is_choice_letter(text[p]) && boundary_after(text, p + 1))
                consider(p, text[p]);
        }
    }
    if (best < 0) return CanonicalAnswer::none();
    return CanonicalAnswer::choice(letter);
}

} // namespace

std::string to_string(AnswerKind kind) {
    switch (kind) {
        case AnswerKind::numeric: return "numeric";
        case AnswerKind::choice: return "choice";
        case AnswerKind::none: return "none";
    }
    return "none";
}

AnswerKind answer_kind_from_string(std::string_view s) {
    if (s == "numeric") return AnswerKind::numeric;
    if (s == "choice") return AnswerKind::choice;
    if (s == "none") return AnswerKind::none;
    throw ValidationError("unknown answer kind: " + std::string(s));
}

std::vector<NumberToken> scan_number_tokens(std::string_view text) {
    std::vector<NumberToken> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        NumberToken token;
        if (text[i] == '\\' && parse_latex_fraction(text, i, token)) {
            tokens.push_back(token);
            i = token.end;
            continue;
        }
        if (token_may_start(text, i) && parse_number_at(text, i, token)) {
            tokens.push_back(token);
            i = token.end;
            continue;
        }
        ++i;
    }
    return tokens;
}

std::string canonicalize_numeric(std::string_view raw) {
    std::string t = trim(raw);
    if (t.empty()) return "";
    auto tokens = scan_number_tokens(t);
    if (tokens.size() == 1) {
        const auto& tok = tokens[0];
        bool prefix_ok = true;
        for (std::size_t i = 0; i < tok.begin; ++i) {
            char c = t[i];
            if (c != ' ' && c != '\t' && c != '$' && c != '(' && c != '"' && c != '\'')
                prefix_ok = false;
        }
        bool suffix_ok = true;
        for (std::size_t i = tok.end; i < t.size(); ++i) {
            char c = t[i];
            if (!is_alpha(c) && c != ' ' && c != '\t' && c != '.' && c != '%' && c != ',' &&
                c != ')' && c != '"' && c != '\'')
                suffix_ok = false;
        }
        if (prefix_ok && suffix_ok) return tok.canonical;
    }
    std::string s = strip_whitespace(t);
    while (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

bool is_numeric_like(std::string_view s) {
    std::string t = trim(s);
    if (t.empty()) return false;
    auto tokens = scan_number_tokens(t);
    if (tokens.size() != 1) return false;
    return canonicalize_numeric(t) == tokens[0].canonical;
}

CanonicalAnswer extract(std::string_view text, AnswerFormat format) {
    if (format == AnswerFormat::choice) return extract_choice(text);
    return extract_numeric(text);
}

bool answers_equal(const CanonicalAnswer& a, const CanonicalAnswer& b) {
    if (a.kind == AnswerKind::none || b.kind == AnswerKind::none) return false;
    if (a.kind != b.kind) {
        std::fprintf(stderr, "scop: comparing %s answer against %s answer\n",
                     to_string(a.kind).c_str(), to_string(b.kind).c_str());
        return false;
    }
    return a.value == b.value;
}

} // namespace scop
