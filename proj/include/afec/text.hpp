#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace afec {

enum class Role { Speaker, Listener };

std::string_view role_name(Role role);
Role parse_role(std::string_view name);

/// A cleaned sentence ready for clustering. `tokens` is always tokenize(text).
struct Utterance {
    std::string text;
    Role role = Role::Speaker;
    std::string source_id;
    std::vector<std::string> tokens;
    std::string origin;  // source tag of the archive the record came from

    /// Identifier unique across both roles: "s:<source_id>" or "l:<source_id>".
    std::string key() const;

    bool operator==(const Utterance&) const = default;
};

std::string utterance_key(Role role, std::string_view source_id);

Utterance make_utterance(std::string text, Role role, std::string source_id, std::string origin = {});

// Discard reasons in rule order. The first failing rule wins.
enum class RejectReason {
    Empty,
    DeletedOrRemoved,
    ContainsUrl,
    ContainsForumMeta,
    LowAlphaRatio,
    TooShort,
};

std::string_view reject_reason_name(RejectReason reason);

struct ValidationOptions {
    std::vector<std::string> url_patterns{"http://", "https://", "www."};
    double min_alpha_ratio = 0.70;
    std::size_t min_tokens = 2;
};

using Validated = std::variant<std::string, RejectReason>;

/// Rewriting rules: decode HTML entities, drop bracketed content, collapse
/// whitespace. Applied until a fixpoint, so rewrite(rewrite(x)) == rewrite(x).
std::string rewrite(std::string_view text);

/// Discard rules. Expects rewritten text.
Validated validate(std::string_view text, const ValidationOptions& options = {});

/// rewrite + validate on raw archive text. A raw "[deleted]"/"[removed]"
/// marker is reported as DeletedOrRemoved even though rewrite would strip it.
Validated clean(std::string_view raw, const ValidationOptions& options = {});

std::vector<std::string> tokenize(std::string_view text);

/// Alphabetic characters over non-whitespace characters, by code point.
double alpha_ratio(std::string_view text);

// Helpers shared with the other modules.
std::string decode_entities(std::string_view text);
std::string remove_bracketed(std::string_view text);
std::string collapse_whitespace(std::string_view text);
std::string to_lower(std::string_view text);
std::string trim(std::string_view text);
bool contains_url(std::string_view text, const std::vector<std::string>& patterns);
bool contains_forum_meta(std::string_view text);
bool is_deleted_marker(std::string_view text);

}  // namespace afec
