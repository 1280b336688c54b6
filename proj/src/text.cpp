#include "afec/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <stdexcept>

namespace afec {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_punct(char c) {
    return static_cast<unsigned char>(c) < 0x80 && std::ispunct(static_cast<unsigned char>(c));
}

bool is_word_char(char c) {
    return static_cast<unsigned char>(c) < 0x80 && (std::isalnum(static_cast<unsigned char>(c)) || c == '_');
}

bool is_opener(char c) { return c == '(' || c == '[' || c == '{'; }
bool is_closer(char c) { return c == ')' || c == ']' || c == '}'; }

char matching_opener(char closer) {
    switch (closer) {
        case ')': return '(';
        case ']': return '[';
        default: return '{';
    }
}

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Parses the body of a numeric entity ("#38" / "#x26"). Returns 0 on failure.
std::uint32_t parse_numeric_entity(std::string_view body) {
    if (body.size() < 2 || body[0] != '#') return 0;
    int base = 10;
    std::size_t pos = 1;
    if (body[1] == 'x' || body[1] == 'X') {
        base = 16;
        pos = 2;
    }
    if (pos >= body.size() || body.size() - pos > 7) return 0;
    std::uint32_t value = 0;
    for (; pos < body.size(); ++pos) {
        const char c = body[pos];
        int digit;
        if (c >= '0' && c <= '9') digit = c - '0';
        else if (base == 16 && c >= 'a' && c <= 'f') digit = c - 'a' + 10;
        else if (base == 16 && c >= 'A' && c <= 'F') digit = c - 'A' + 10;
        else return 0;
        value = value * base + digit;
    }
    if (value > 0x10FFFF || (value >= 0xD800 && value <= 0xDFFF)) return 0;
    return value;
}

// Minimal UTF-8 walk: yields code points, invalid bytes come back as 0xFFFD.
template <typename Fn>
void for_each_code_point(std::string_view text, Fn&& fn) {
    std::size_t i = 0;
    while (i < text.size()) {
        const auto b = static_cast<unsigned char>(text[i]);
        std::uint32_t cp;
        std::size_t len;
        if (b < 0x80) { cp = b; len = 1; }
        else if ((b & 0xE0) == 0xC0) { cp = b & 0x1F; len = 2; }
        else if ((b & 0xF0) == 0xE0) { cp = b & 0x0F; len = 3; }
        else if ((b & 0xF8) == 0xF0) { cp = b & 0x07; len = 4; }
        else { fn(0xFFFDu); ++i; continue; }
        if (i + len > text.size()) { fn(0xFFFDu); ++i; continue; }
        bool ok = true;
        for (std::size_t k = 1; k < len; ++k) {
            const auto c = static_cast<unsigned char>(text[i + k]);
            if ((c & 0xC0) != 0x80) { ok = false; break; }
            cp = (cp << 6) | (c & 0x3F);
        }
        if (!ok) { fn(0xFFFDu); ++i; continue; }
        fn(cp);
        i += len;
    }
}

bool is_alpha_code_point(std::uint32_t cp) {
    if (cp < 0x80) return std::isalpha(static_cast<int>(cp)) != 0;
    if (cp >= 0xC0 && cp <= 0x24F) return cp != 0xD7 && cp != 0xF7;  // Latin-1 + Extended
    if (cp >= 0x370 && cp <= 0x3FF) return true;                      // Greek
    if (cp >= 0x400 && cp <= 0x4FF) return true;                      // Cyrillic
    return false;
}

bool is_space_code_point(std::uint32_t cp) {
    return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' || cp == 0xA0;
}

constexpr std::array<std::string_view, 6> kContractions{"n't", "'m", "'re", "'s", "'ve", "'ll"};

// Returns the length of a contraction suffix at the end of `word`, or 0.
std::size_t contraction_suffix(std::string_view word) {
    const std::string lower = to_lower(word);
    auto check = [&](std::string_view suffix) -> std::size_t {
        if (lower.size() > suffix.size() && lower.ends_with(suffix)) return suffix.size();
        // Typographic apostrophe (U+2019, 3 bytes) in place of '.
        std::string curly(suffix);
        const auto apos = curly.find('\'');
        curly.replace(apos, 1, "\xE2\x80\x99");
        if (lower.size() > curly.size() && lower.ends_with(curly)) return curly.size();
        return 0;
    };
    for (auto suffix : kContractions)
        if (auto n = check(suffix)) return n;
    return check("'d");
}

bool is_contraction_token(std::string_view word) {
    const std::string lower = to_lower(word);
    for (auto suffix : kContractions)
        if (lower == suffix) return true;
    return lower == "'d";
}

void split_chunk(std::string_view chunk, std::vector<std::string>& out) {
    std::vector<std::string> trailing;
    std::size_t begin = 0;
    std::size_t end = chunk.size();

    while (begin < end && is_ascii_punct(chunk[begin])) {
        if (chunk[begin] == '\'' && is_contraction_token(chunk.substr(begin, end - begin))) break;
        std::size_t run = begin + 1;
        while (run < end && chunk[run] == chunk[begin]) ++run;
        out.emplace_back(chunk.substr(begin, run - begin));
        begin = run;
    }
    while (end > begin && is_ascii_punct(chunk[end - 1])) {
        std::size_t run = end - 1;
        while (run > begin && chunk[run - 1] == chunk[end - 1]) --run;
        trailing.emplace_back(chunk.substr(run, end - run));
        end = run;
    }
    if (begin < end) {
        const std::string_view core = chunk.substr(begin, end - begin);
        if (const std::size_t suffix = contraction_suffix(core)) {
            out.emplace_back(core.substr(0, core.size() - suffix));
            out.emplace_back(core.substr(core.size() - suffix));
        } else {
            out.emplace_back(core);
        }
    }
    out.insert(out.end(), trailing.rbegin(), trailing.rend());
}

}  // namespace

std::string_view role_name(Role role) { return role == Role::Speaker ? "speaker" : "listener"; }

Role parse_role(std::string_view name) {
    if (name == "speaker") return Role::Speaker;
    if (name == "listener") return Role::Listener;
    throw std::invalid_argument("unknown role: " + std::string(name));
}

std::string utterance_key(Role role, std::string_view source_id) {
    return (role == Role::Speaker ? "s:" : "l:") + std::string(source_id);
}

std::string Utterance::key() const { return utterance_key(role, source_id); }

Utterance make_utterance(std::string text, Role role, std::string source_id, std::string origin) {
    Utterance u;
    u.tokens = tokenize(text);
    u.text = std::move(text);
    u.role = role;
    u.source_id = std::move(source_id);
    u.origin = std::move(origin);
    return u;
}

std::string_view reject_reason_name(RejectReason reason) {
    switch (reason) {
        case RejectReason::Empty: return "Empty";
        case RejectReason::DeletedOrRemoved: return "DeletedOrRemoved";
        case RejectReason::ContainsUrl: return "ContainsUrl";
        case RejectReason::ContainsForumMeta: return "ContainsForumMeta";
        case RejectReason::LowAlphaRatio: return "LowAlphaRatio";
        case RejectReason::TooShort: return "TooShort";
    }
    return "Unknown";
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    for (auto& c : out)
        if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view text) {
    std::size_t b = 0, e = text.size();
    while (b < e && is_space(text[b])) ++b;
    while (e > b && is_space(text[e - 1])) --e;
    return std::string(text.substr(b, e - b));
}

std::string decode_entities(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '&') {
            out.push_back(text[i++]);
            continue;
        }
        const std::size_t semi = text.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 10) {
            out.push_back(text[i++]);
            continue;
        }
        const std::string_view body = text.substr(i + 1, semi - i - 1);
        std::string replacement;
        if (body == "amp") replacement = "&";
        else if (body == "lt") replacement = "<";
        else if (body == "gt") replacement = ">";
        else if (body == "quot") replacement = "\"";
        else if (body == "apos") replacement = "'";
        else if (body == "nbsp") replacement = " ";
        else if (const auto cp = parse_numeric_entity(body)) append_utf8(replacement, cp);

        if (replacement.empty()) {
            out.push_back(text[i++]);
            continue;
        }
        out += replacement;
        i = semi + 1;
    }
    return out;
}

std::string remove_bracketed(std::string_view text) {
    std::string current(text);
    while (true) {
        // Mark innermost bracket-free pairs, then drop them all at once.
        std::vector<std::pair<std::size_t, std::size_t>> spans;
        std::size_t open = std::string::npos;
        for (std::size_t i = 0; i < current.size(); ++i) {
            const char c = current[i];
            if (is_opener(c)) {
                open = i;
            } else if (is_closer(c)) {
                if (open != std::string::npos && current[open] == matching_opener(c)) spans.emplace_back(open, i + 1);
                open = std::string::npos;
            }
        }
        if (spans.empty()) return current;
        std::string next;
        next.reserve(current.size());
        std::size_t pos = 0;
        for (auto [b, e] : spans) {
            next.append(current, pos, b - pos);
            pos = e;
        }
        next.append(current, pos, std::string::npos);
        current = std::move(next);
    }
}

std::string collapse_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

std::string rewrite(std::string_view text) {
    std::string current(text);
    while (true) {
        std::string next = collapse_whitespace(remove_bracketed(decode_entities(current)));
        if (next == current) return current;
        current = std::move(next);
    }
}

bool contains_url(std::string_view text, const std::vector<std::string>& patterns) {
    const std::string lower = to_lower(text);
    return std::any_of(patterns.begin(), patterns.end(),
                       [&](const std::string& p) { return !p.empty() && lower.find(to_lower(p)) != std::string::npos; });
}

bool contains_forum_meta(std::string_view text) {
    const std::string lower = to_lower(text);
    for (std::size_t i = 0; i + 2 < lower.size(); ++i) {
        if ((lower[i] == 'r' || lower[i] == 'u') && lower[i + 1] == '/' && is_word_char(lower[i + 2]) &&
            (i == 0 || !is_word_char(lower[i - 1])))
            return true;
    }
    constexpr std::string_view word = "reddit";
    for (std::size_t pos = lower.find(word); pos != std::string::npos; pos = lower.find(word, pos + 1)) {
        const bool left = pos == 0 || !is_word_char(lower[pos - 1]);
        const bool right = pos + word.size() == lower.size() || !is_word_char(lower[pos + word.size()]);
        if (left && right) return true;
    }
    return false;
}

bool is_deleted_marker(std::string_view text) {
    const std::string t = to_lower(trim(text));
    return t == "[deleted]" || t == "[removed]";
}

double alpha_ratio(std::string_view text) {
    std::size_t alpha = 0, total = 0;
    for_each_code_point(text, [&](std::uint32_t cp) {
        if (is_space_code_point(cp)) return;
        ++total;
        if (is_alpha_code_point(cp)) ++alpha;
    });
    return total == 0 ? 0.0 : static_cast<double>(alpha) / static_cast<double>(total);
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        if (j > i) split_chunk(text.substr(i, j - i), tokens);
        i = j;
    }
    return tokens;
}

Validated validate(std::string_view text, const ValidationOptions& options) {
    std::string t = trim(text);
    if (t.empty()) return RejectReason::Empty;
    if (is_deleted_marker(t)) return RejectReason::DeletedOrRemoved;
    if (contains_url(t, options.url_patterns)) return RejectReason::ContainsUrl;
    if (contains_forum_meta(t)) return RejectReason::ContainsForumMeta;
    // Small slack so a ratio landing exactly on the threshold is not lost to rounding.
    if (alpha_ratio(t) + 1e-12 < options.min_alpha_ratio) return RejectReason::LowAlphaRatio;
    if (tokenize(t).size() < options.min_tokens) return RejectReason::TooShort;
    return t;
}

Validated clean(std::string_view raw, const ValidationOptions& options) {
    if (is_deleted_marker(raw)) return RejectReason::DeletedOrRemoved;
    return validate(rewrite(raw), options);
}

}  // namespace afec
