#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace afec {

struct RawSubmission {
    std::string id;
    std::string title;
    std::string body;
    std::int64_t created_utc = 0;
    std::string source;

    bool operator==(const RawSubmission&) const = default;
};

struct RawComment {
    std::string id;
    std::string parent_id;
    std::string link_id;
    std::string body;
    std::int64_t created_utc = 0;

    bool operator==(const RawComment&) const = default;
};

struct RawPair {
    RawSubmission submission;
    RawComment comment;

    bool operator==(const RawPair&) const = default;
};

enum class ArchiveKind { Submission, Comment };

struct IngestOptions {
    // Strip "t1_"/"t3_"-style type markers from ids before matching.
    bool strip_type_prefixes = true;
    // Source tag for records that carry none.
    std::string default_source = "reddit";
};

struct LoadStats {
    std::size_t records = 0;
    std::size_t malformed = 0;
    std::size_t duplicates = 0;  // submission ids seen more than once (last wins)
};

/// Removes a leading "t<digit>_" marker, if present.
std::string strip_type_prefix(std::string_view id);

/// Parses one archive line. Returns nullopt for malformed lines.
std::optional<RawSubmission> parse_submission(std::string_view line, const IngestOptions& options = {});
std::optional<RawComment> parse_comment(std::string_view line, const IngestOptions& options = {});

/// Streams records to `sink` in file order; malformed lines are counted and skipped.
LoadStats for_each_submission(std::istream& in, const std::function<void(RawSubmission&&)>& sink,
                              const IngestOptions& options = {});
LoadStats for_each_comment(std::istream& in, const std::function<void(RawComment&&)>& sink,
                           const IngestOptions& options = {});

/// Loads a whole submission archive. Duplicate ids keep the last record.
/// Throws ArchiveError if the file cannot be opened.
std::vector<RawSubmission> load_submissions(const std::filesystem::path& path, LoadStats* stats = nullptr,
                                            const IngestOptions& options = {});
std::vector<RawSubmission> load_submissions(std::istream& in, LoadStats* stats = nullptr,
                                            const IngestOptions& options = {});
std::vector<RawComment> load_comments(const std::filesystem::path& path, LoadStats* stats = nullptr,
                                      const IngestOptions& options = {});
std::vector<RawComment> load_comments(std::istream& in, LoadStats* stats = nullptr,
                                      const IngestOptions& options = {});

/// Keeps records with start <= created_utc <= end. Throws std::invalid_argument if start > end.
template <typename Record>
std::vector<Record> filter_time_window(std::vector<Record> records, std::int64_t start, std::int64_t end);

struct PairStats {
    std::size_t comments = 0;
    std::size_t paired = 0;
    std::size_t unresolved = 0;  // parent is another comment or an unknown submission
};

/// One pair per comment whose parent is a loaded submission. Output is sorted
/// by (submission id, comment id), so it does not depend on input order.
std::vector<RawPair> pair_direct_replies(const std::vector<RawSubmission>& submissions,
                                         const std::vector<RawComment>& comments, PairStats* stats = nullptr);

/// Parses "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SS" (UTC) or plain unix seconds.
/// A bare date resolves to 00:00:00, or to 23:59:59 when end_of_day is set.
std::int64_t parse_time_bound(std::string_view text, bool end_of_day);

// Thread file: one JSON object per submission with its direct replies,
// {"submission": {...}, "comments": [{...}, ...]}. Submissions without
// replies are kept with an empty list.
struct Thread {
    RawSubmission submission;
    std::vector<RawComment> comments;

    bool operator==(const Thread&) const = default;
};

std::vector<Thread> group_threads(const std::vector<RawSubmission>& submissions, const std::vector<RawPair>& pairs);
std::vector<RawPair> thread_pairs(const std::vector<Thread>& threads);

void write_threads(std::ostream& out, const std::vector<Thread>& threads);
void write_threads(const std::filesystem::path& path, const std::vector<Thread>& threads);
std::vector<Thread> read_threads(std::istream& in);
std::vector<Thread> read_threads(const std::filesystem::path& path);

}  // namespace afec
