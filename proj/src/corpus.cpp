#include "afec/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <chrono>
#include <fstream>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "afec/errors.hpp"

using json = nlohmann::json;

namespace afec {

namespace {

std::optional<std::int64_t> parse_seconds(const json& value) {
    if (value.is_number_integer()) return value.get<std::int64_t>();
    if (value.is_number_float()) return static_cast<std::int64_t>(value.get<double>());
    if (value.is_string()) {
        const auto& s = value.get_ref<const std::string&>();
        std::int64_t out = 0;
        const auto* end = s.data() + s.size();
        auto [ptr, ec] = std::from_chars(s.data(), end, out);
        if (ec != std::errc{} || ptr == s.data()) return std::nullopt;
        // "1451606400.0" style values appear in some dumps.
        if (ptr != end && *ptr != '.') return std::nullopt;
        return out;
    }
    return std::nullopt;
}

std::string string_field(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) return {};
    return it->get<std::string>();
}

std::string clean_id(std::string id, const IngestOptions& options) {
    return options.strip_type_prefixes ? strip_type_prefix(id) : id;
}

std::optional<RawSubmission> submission_from_json(const json& obj, const IngestOptions& options) {
    if (!obj.is_object()) return std::nullopt;
    RawSubmission s;
    s.id = clean_id(string_field(obj, "id"), options);
    if (s.id.empty()) return std::nullopt;
    auto ts = obj.find("created_utc");
    if (ts == obj.end()) return std::nullopt;
    auto seconds = parse_seconds(*ts);
    if (!seconds) return std::nullopt;
    s.created_utc = *seconds;
    s.title = string_field(obj, "title");
    s.body = obj.contains("selftext") ? string_field(obj, "selftext") : string_field(obj, "body");
    s.source = string_field(obj, "source");
    if (s.source.empty()) s.source = options.default_source;
    return s;
}

std::optional<RawComment> comment_from_json(const json& obj, const IngestOptions& options) {
    if (!obj.is_object()) return std::nullopt;
    RawComment c;
    c.id = clean_id(string_field(obj, "id"), options);
    // A comment parent keeps its prefix so it can never collide with a submission id.
    const std::string parent = string_field(obj, "parent_id");
    c.parent_id = parent.rfind("t1_", 0) == 0 ? parent : clean_id(parent, options);
    if (c.id.empty() || c.parent_id.empty()) return std::nullopt;
    auto ts = obj.find("created_utc");
    if (ts == obj.end()) return std::nullopt;
    auto seconds = parse_seconds(*ts);
    if (!seconds) return std::nullopt;
    c.created_utc = *seconds;
    c.link_id = clean_id(string_field(obj, "link_id"), options);
    c.body = string_field(obj, "body");
    return c;
}

json to_json(const RawSubmission& s) {
    return json{{"id", s.id}, {"title", s.title}, {"selftext", s.body}, {"created_utc", s.created_utc},
                {"source", s.source}};
}

json to_json(const RawComment& c) {
    return json{{"id", c.id},     {"parent_id", c.parent_id},       {"link_id", c.link_id},
                {"body", c.body}, {"created_utc", c.created_utc}};
}

template <typename Record, typename Parse>
LoadStats stream_records(std::istream& in, const std::function<void(Record&&)>& sink, Parse parse) {
    LoadStats stats;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto record = parse(line);
        if (!record) {
            ++stats.malformed;
            continue;
        }
        ++stats.records;
        sink(std::move(*record));
    }
    return stats;
}

std::ifstream open_archive(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArchiveError("cannot open archive: " + path.string());
    return in;
}

}  // namespace

std::string strip_type_prefix(std::string_view id) {
    if (id.size() > 3 && id[0] == 't' && id[1] >= '0' && id[1] <= '9' && id[2] == '_') return std::string(id.substr(3));
    return std::string(id);
}

std::optional<RawSubmission> parse_submission(std::string_view line, const IngestOptions& options) {
    json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded()) return std::nullopt;
    return submission_from_json(obj, options);
}

std::optional<RawComment> parse_comment(std::string_view line, const IngestOptions& options) {
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded()) return std::nullopt;
    return comment_from_json(obj, options);
}

LoadStats for_each_submission(std::istream& in, const std::function<void(RawSubmission&&)>& sink,
                              const IngestOptions& options) {
    return stream_records<RawSubmission>(in, sink, [&](std::string_view l) { return parse_submission(l, options); });
}

LoadStats for_each_comment(std::istream& in, const std::function<void(RawComment&&)>& sink,
                           const IngestOptions& options) {
    return stream_records<RawComment>(in, sink, [&](std::string_view l) { return parse_comment(l, options); });
}

std::vector<RawSubmission> load_submissions(std::istream& in, LoadStats* stats, const IngestOptions& options) {
    std::vector<RawSubmission> out;
    std::unordered_map<std::string, std::size_t> index;
    std::size_t duplicates = 0;
    LoadStats s = for_each_submission(
        in,
        [&](RawSubmission&& rec) {
            auto [it, inserted] = index.emplace(rec.id, out.size());
            if (inserted) {
                out.push_back(std::move(rec));
            } else {
                ++duplicates;
                out[it->second] = std::move(rec);
            }
        },
        options);
    s.duplicates = duplicates;
    if (stats) *stats = s;
    return out;
}

std::vector<RawSubmission> load_submissions(const std::filesystem::path& path, LoadStats* stats,
                                            const IngestOptions& options) {
    auto in = open_archive(path);
    return load_submissions(in, stats, options);
}

std::vector<RawComment> load_comments(std::istream& in, LoadStats* stats, const IngestOptions& options) {
    std::vector<RawComment> out;
    LoadStats s = for_each_comment(in, [&](RawComment&& rec) { out.push_back(std::move(rec)); }, options);
    if (stats) *stats = s;
    return out;
}

std::vector<RawComment> load_comments(const std::filesystem::path& path, LoadStats* stats,
                                      const IngestOptions& options) {
    auto in = open_archive(path);
    return load_comments(in, stats, options);
}

template <typename Record>
std::vector<Record> filter_time_window(std::vector<Record> records, std::int64_t start, std::int64_t end) {
    if (start > end) throw std::invalid_argument("time window start is after end");
    std::erase_if(records, [&](const Record& r) { return r.created_utc < start || r.created_utc > end; });
    return records;
}

template std::vector<RawSubmission> filter_time_window(std::vector<RawSubmission>, std::int64_t, std::int64_t);
template std::vector<RawComment> filter_time_window(std::vector<RawComment>, std::int64_t, std::int64_t);

std::vector<RawPair> pair_direct_replies(const std::vector<RawSubmission>& submissions,
                                         const std::vector<RawComment>& comments, PairStats* stats) {
    std::unordered_map<std::string_view, const RawSubmission*> by_id;
    by_id.reserve(submissions.size());
    for (const auto& s : submissions) by_id[s.id] = &s;

    std::vector<RawPair> pairs;
    PairStats st;
    st.comments = comments.size();
    for (const auto& c : comments) {
        auto it = by_id.find(c.parent_id);
        if (it == by_id.end()) {
            ++st.unresolved;
            continue;
        }
        pairs.push_back(RawPair{*it->second, c});
    }
    st.paired = pairs.size();
    std::sort(pairs.begin(), pairs.end(), [](const RawPair& a, const RawPair& b) {
        if (a.submission.id != b.submission.id) return a.submission.id < b.submission.id;
        if (a.comment.id != b.comment.id) return a.comment.id < b.comment.id;
        return a.comment.created_utc < b.comment.created_utc;
    });
    if (stats) *stats = st;
    return pairs;
}

std::int64_t parse_time_bound(std::string_view text, bool end_of_day) {
    using namespace std::chrono;
    const std::string s(text);
    if (!s.empty() && s.find_first_not_of("0123456789-") == std::string::npos && s.find('-', 1) == std::string::npos) {
        return std::stoll(s);
    }
    int y = 0, m = 0, d = 0, hh = 0, mm = 0, ss = 0;
    char tail = 0;
    const int n = std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d%c", &y, &m, &d, &hh, &mm, &ss, &tail);
    if (n != 3 && n != 6) throw std::invalid_argument("unparseable time bound: " + s);
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw std::invalid_argument("invalid date: " + s);
    if (n == 3) {
        hh = end_of_day ? 23 : 0;
        mm = end_of_day ? 59 : 0;
        ss = end_of_day ? 59 : 0;
    }
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<std::int64_t>(days) * 86400 + hh * 3600 + mm * 60 + ss;
}

std::vector<Thread> group_threads(const std::vector<RawSubmission>& submissions, const std::vector<RawPair>& pairs) {
    std::map<std::string, Thread> by_id;
    for (const auto& s : submissions) by_id[s.id].submission = s;
    for (const auto& p : pairs) {
        auto& t = by_id[p.submission.id];
        t.submission = p.submission;
        t.comments.push_back(p.comment);
    }
    std::vector<Thread> out;
    out.reserve(by_id.size());
    for (auto& [id, t] : by_id) out.push_back(std::move(t));
    return out;
}

std::vector<RawPair> thread_pairs(const std::vector<Thread>& threads) {
    std::vector<RawPair> out;
    for (const auto& t : threads)
        for (const auto& c : t.comments) out.push_back(RawPair{t.submission, c});
    return out;
}

void write_threads(std::ostream& out, const std::vector<Thread>& threads) {
    for (const auto& t : threads) {
        json comments = json::array();
        for (const auto& c : t.comments) comments.push_back(to_json(c));
        out << json{{"submission", to_json(t.submission)}, {"comments", std::move(comments)}}.dump() << '\n';
    }
}

void write_threads(const std::filesystem::path& path, const std::vector<Thread>& threads) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArchiveError("cannot write: " + path.string());
    write_threads(out, threads);
}

std::vector<Thread> read_threads(std::istream& in) {
    const IngestOptions verbatim{.strip_type_prefixes = false, .default_source = ""};
    std::vector<Thread> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.contains("submission"))
            throw ArchiveError("malformed thread record at line " + std::to_string(line_no));
        Thread t;
        auto s = submission_from_json(obj["submission"], verbatim);
        if (!s) throw ArchiveError("malformed submission at line " + std::to_string(line_no));
        t.submission = std::move(*s);
        for (const auto& cj : obj.value("comments", json::array())) {
            auto c = comment_from_json(cj, verbatim);
            if (!c) throw ArchiveError("malformed comment at line " + std::to_string(line_no));
            t.comments.push_back(std::move(*c));
        }
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<Thread> read_threads(const std::filesystem::path& path) {
    auto in = open_archive(path);
    return read_threads(in);
}

}  // namespace afec
