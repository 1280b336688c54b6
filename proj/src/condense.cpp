#include "afec/condense.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "afec/errors.hpp"
#include "afec/subprocess.hpp"

namespace afec {

namespace {

using WordSet = std::unordered_set<std::string_view>;

const WordSet kAbbreviations{"mr.", "mrs.", "ms.", "dr.", "prof.", "jr.", "sr.", "st.", "vs.", "e.g.", "i.e.", "etc."};

const WordSet kStopWords{
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are", "as", "at", "be",
    "because", "been", "before", "being", "below", "between", "both", "but", "by", "can", "could", "did", "do",
    "does", "doing", "down", "during", "each", "few", "for", "from", "further", "had", "has", "have", "having", "he",
    "her", "here", "hers", "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its",
    "itself", "just", "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once",
    "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "same", "she", "should", "so", "some",
    "such", "than", "that", "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this",
    "those", "through", "to", "too", "under", "until", "up", "very", "was", "we", "were", "what", "when", "where",
    "which", "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
    "yourselves", "'m", "'s", "'re", "'ve", "'ll", "'d", "n't", "really", "also", "got", "get", "like", "im"};

bool has_alnum(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) {
        return static_cast<unsigned char>(c) >= 0x80 || std::isalnum(static_cast<unsigned char>(c));
    });
}

std::string naive_stem(std::string word) {
    if (word.size() > 3 && word.back() == 's' && word[word.size() - 2] != 's') word.pop_back();
    return word;
}

std::vector<std::string> core_words(std::string_view sentence) {
    std::vector<std::string> out;
    for (auto& tok : tokenize(sentence)) {
        std::string lower = to_lower(tok);
        if (!has_alnum(lower) || kStopWords.contains(lower)) continue;
        out.push_back(naive_stem(std::move(lower)));
    }
    return out;
}

bool starts_sentence(std::string_view text, std::size_t pos) {
    const auto c = static_cast<unsigned char>(text[pos]);
    if (std::isupper(c) || c == '"' || c == '\'') return true;
    // U+201C / U+2018 opening quotes
    return c == 0xE2 && pos + 2 < text.size() && static_cast<unsigned char>(text[pos + 1]) == 0x80 &&
           (static_cast<unsigned char>(text[pos + 2]) == 0x9C || static_cast<unsigned char>(text[pos + 2]) == 0x98);
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closing(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }
bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// --- baseline tagger word lists -------------------------------------------

const WordSet kDeterminers{"a",    "an",   "the",   "my",   "your",  "his",   "her",     "its",  "our",
                           "their", "this", "that", "these", "those", "some", "any", "every", "each",
                           "no",   "all",  "another", "such", "both",  "either", "neither", "whose"};

const WordSet kPronouns{"i",        "you",      "he",        "she",     "it",       "we",       "they",
                        "me",       "him",      "us",        "them",    "myself",   "yourself", "himself",
                        "herself",  "itself",   "ourselves", "themselves", "someone", "somebody", "everyone",
                        "everybody", "anyone",  "anybody",   "nobody",  "nothing",  "something", "everything",
                        "anything", "mine",     "yours",     "hers",    "ours",     "theirs",   "there",
                        "what",     "who",      "whom",      "one"};

const WordSet kAdpositions{"in",     "on",      "at",      "for",    "with",   "from",    "by",     "about",
                           "of",     "into",    "over",    "under",  "during", "through", "between", "without",
                           "around", "against", "among",   "upon",   "off",    "up",      "down",   "out",
                           "near",   "across",  "behind",  "beyond", "toward", "towards", "onto",   "inside",
                           "outside", "via",    "per",     "than",   "within", "along",   "despite"};

const WordSet kSubordinators{"because", "although", "though", "if",     "when",  "whenever", "while",
                             "since",   "unless",   "until",  "whether", "after", "before",   "once",
                             "as",      "whereas",  "which",  "who",    "where"};

const WordSet kCoordinators{"and", "or", "but", "nor", "yet", "plus"};

const WordSet kAuxiliaries{"am",     "is",    "are",   "was",    "were",   "be",     "been",   "being",
                           "'m",     "'re",   "have",  "has",    "had",    "'ve",    "do",     "does",
                           "did",    "will",  "would", "shall",  "should", "can",    "could",  "may",
                           "might",  "must",  "'ll",   "'d",     "ca",     "wo",     "im",     "ive",
                           "dont",   "cant",  "didnt", "wont",   "isnt",   "wasnt",  "doesnt", "havent",
                           "gonna",  "wanna", "gotta", "youre",  "theyre", "thats"};

const WordSet kNonFiniteAux{"be", "been", "being"};

const WordSet kAdverbs{"very",    "really",  "so",       "too",      "just",     "also",       "still",  "already",
                       "always",  "never",   "ever",     "now",      "then",     "today",      "tonight", "tomorrow",
                       "yesterday", "here",  "again",    "finally",  "soon",     "almost",     "even",   "only",
                       "quite",   "why",     "how",      "maybe",    "actually", "definitely", "probably", "literally",
                       "else",    "once",    "twice",    "often",    "sometimes", "usually",   "together", "away",
                       "back",    "instead", "anymore",  "ago",      "later",    "recently",   "pretty",  "kinda",
                       "sorta",   "lately",  "somehow",  "anyway",   "otherwise", "well",      "much",    "more",
                       "most",    "less",    "least",    "enough",   "not"};

const WordSet kAdjectives{
    "good",    "great",     "new",      "old",       "best",      "better",   "bad",      "worse",     "worst",
    "happy",   "sad",       "nice",     "big",       "small",     "little",   "first",    "last",      "long",
    "short",   "high",      "low",      "young",     "awesome",   "amazing",  "beautiful", "cute",     "funny",
    "hard",    "easy",      "free",     "full",      "late",      "early",    "right",    "wrong",     "sure",
    "glad",    "proud",     "tired",    "busy",      "favorite",  "favourite", "cool",    "weird",     "strange",
    "same",    "different", "other",    "whole",     "real",      "true",     "own",      "ready",     "sorry",
    "fine",    "okay",      "ok",       "lovely",    "perfect",   "wonderful", "terrible", "horrible", "awful",
    "crazy",   "random",    "huge",     "tiny",      "next",      "several",  "many",     "few",       "lucky",
    "lonely",  "angry",     "afraid",   "anxious",   "nervous",   "grateful", "thankful", "jealous",   "sick",
    "quiet",   "loud",      "warm",     "cold",      "hot",       "rainy",    "sunny",    "snowy",     "delicious",
    "fun",     "boring",    "interesting", "important", "special", "simple",  "final",    "single",    "super",
    "sweet",   "kind",      "friendly", "entire",    "exciting",  "scary",    "bored",    "excited",   "worried",
    "scared",  "embarrassed", "disappointed", "surprised", "impressed", "ashamed", "guilty", "confident",
    "hopeful", "content",   "furious",  "annoyed",   "terrified", "nostalgic", "sentimental", "devastated",
    "prepared", "apprehensive", "faithful", "trusting", "caring", "joyful", "disgusted", "able", "unable",
    "whole",   "main",      "only"};

const WordSet kInterjections{"hi",   "hello", "hey",  "yes",    "yeah", "yep",    "nope",  "wow",
                             "oh",   "lol",   "haha", "please", "ok",   "okay",   "thanks", "thank",
                             "congrats", "congratulations", "yay", "ugh", "hmm",  "welp"};

const WordSet kNumberWords{"one",   "two",    "three",    "four",    "five",   "six",   "seven", "eight",
                           "nine",  "ten",    "eleven",   "twelve",  "twenty", "thirty", "forty", "fifty",
                           "hundred", "thousand", "million", "billion", "dozen"};

// -ing/-ed words that are nouns, not verb forms.
const WordSet kNounExceptions{"thing",   "something", "nothing",  "anything", "everything", "morning",  "evening",
                              "wedding", "ceiling",   "king",     "ring",     "spring",     "string",   "building",
                              "clothing", "pudding",  "sibling",  "darling",  "awning",     "bed",      "red",
                              "speed",   "hundred",   "seed",     "weed",     "shed",       "sled",     "breed",
                              "greed",   "creed",     "meeting",  "feeling",  "ending",     "beginning", "painting",
                              "drawing", "weekend",   "friend",   "boyfriend", "girlfriend", "husband",   "kid"};

const WordSet kVerbBases{
    "accept", "achieve", "add", "admit", "agree", "allow", "answer", "appear", "apply", "argue", "arrive", "ask",
    "attend", "avoid", "bake", "bathe", "become", "begin", "believe", "belong", "bite", "blow", "book", "borrow",
    "bother", "break", "bring", "brush", "build", "burn", "buy", "call", "calm", "care", "carry", "catch", "celebrate",
    "change", "chat", "check", "cheer", "choose", "clean", "climb", "close", "collect", "come", "compare",
    "complain", "complete", "cook", "cost", "cough", "count", "cover", "crash", "create", "cross", "cry", "cut",
    "dance", "date", "deal", "decide", "deliver", "deserve", "design", "die", "discover", "dislike", "do", "draw",
    "dream", "dress", "drink", "drive", "drop", "earn", "eat", "end", "enjoy", "enter", "escape", "expect",
    "explain", "explore", "fail", "fall", "feed", "feel", "fight", "figure", "fill", "find", "finish", "fit", "fix",
    "fly", "follow", "forget", "forgive", "freeze", "gain", "get", "give", "go", "grab", "graduate", "greet", "grow",
    "guess", "hang", "happen", "hate", "hear", "help", "hide", "hit", "hold", "hope", "hug", "hurt", "ignore",
    "imagine", "improve", "invite", "join", "joke", "jump", "keep", "kill", "kiss", "knit", "know", "land", "last",
    "laugh", "lay", "lead", "learn", "leave", "lend", "let", "lie", "like", "listen", "live", "lose", "love",
    "make", "manage", "marry", "matter", "mean", "meet", "mention", "mind", "miss", "move", "need", "notice",
    "offer", "open", "order", "organize", "own", "paint", "pass", "pay", "pick", "plan", "plant", "play", "prefer",
    "prepare", "pretend", "promise", "protect", "pull", "push", "put", "quit", "rain", "raise", "reach", "read",
    "realize", "receive", "recommend", "relax", "remember", "remind", "rent", "repair", "reply", "rescue", "rest",
    "return", "ride", "ring", "rise", "run", "save", "say", "scare", "search", "see", "seem", "sell", "send",
    "serve", "set", "settle", "shake", "share", "shine", "shop", "shout", "show", "shut", "sign", "sing", "sit",
    "skip", "sleep", "smell", "smile", "snow", "solve", "speak", "spend", "stand", "start", "stay", "steal", "stop",
    "study", "succeed", "suggest", "support", "suppose", "surprise", "survive", "swim", "take", "talk", "taste",
    "teach", "tell", "thank", "think", "throw", "touch", "train", "travel", "treat", "try", "turn", "understand",
    "upgrade", "use", "visit", "vote", "wait", "wake", "walk", "want", "wash", "watch", "wear", "win", "wish",
    "wonder", "work", "worry", "write", "adopt", "text", "feel", "beat", "fold", "bake", "graduate", "propose",
    "retire", "quit", "hire", "pass", "fire", "confess", "sneeze", "nap", "binge", "finish", "hate", "stumble"};

const std::unordered_map<std::string_view, std::string_view> kIrregularForms{
    {"went", "go"},       {"gone", "go"},         {"got", "get"},       {"gotten", "get"},    {"made", "make"},
    {"saw", "see"},       {"seen", "see"},        {"felt", "feel"},     {"thought", "think"}, {"knew", "know"},
    {"known", "know"},    {"took", "take"},       {"taken", "take"},    {"came", "come"},     {"gave", "give"},
    {"given", "give"},    {"found", "find"},      {"told", "tell"},     {"said", "say"},      {"left", "leave"},
    {"bought", "buy"},    {"brought", "bring"},   {"began", "begin"},   {"begun", "begin"},   {"became", "become"},
    {"broke", "break"},   {"broken", "break"},    {"built", "build"},   {"caught", "catch"},  {"chose", "choose"},
    {"chosen", "choose"}, {"drew", "draw"},       {"drawn", "draw"},    {"drank", "drink"},   {"drove", "drive"},
    {"driven", "drive"},  {"ate", "eat"},         {"eaten", "eat"},     {"fell", "fall"},     {"fallen", "fall"},
    {"fought", "fight"},  {"flew", "fly"},        {"forgot", "forget"}, {"forgotten", "forget"}, {"froze", "freeze"},
    {"grew", "grow"},     {"grown", "grow"},      {"hung", "hang"},     {"heard", "hear"},    {"hid", "hide"},
    {"held", "hold"},     {"kept", "keep"},       {"laid", "lay"},      {"led", "lead"},      {"learnt", "learn"},
    {"lent", "lend"},     {"lost", "lose"},       {"meant", "mean"},    {"met", "meet"},      {"paid", "pay"},
    {"ran", "run"},       {"rode", "ride"},       {"rang", "ring"},     {"rose", "rise"},     {"sold", "sell"},
    {"sent", "send"},     {"shook", "shake"},     {"shone", "shine"},   {"sang", "sing"},     {"sung", "sing"},
    {"sat", "sit"},       {"slept", "sleep"},     {"spoke", "speak"},   {"spoken", "speak"},  {"spent", "spend"},
    {"stood", "stand"},   {"stole", "steal"},     {"swam", "swim"},     {"taught", "teach"},  {"threw", "throw"},
    {"thrown", "throw"},  {"understood", "understand"}, {"woke", "wake"}, {"wore", "wear"},   {"won", "win"},
    {"wrote", "write"},   {"written", "write"},   {"dreamt", "dream"},  {"forgave", "forgive"}, {"beaten", "beat"},
    {"bit", "bite"},      {"blew", "blow"},       {"dealt", "deal"},    {"fed", "feed"},      {"ridden", "ride"}};

bool is_number(std::string_view w) {
    if (kNumberWords.contains(w)) return true;
    bool digit = false;
    for (char c : w) {
        if (std::isdigit(static_cast<unsigned char>(c))) digit = true;
        else if (c != ',' && c != '.' && c != ':' && c != '%' && c != '$') return false;
    }
    return digit;
}

bool is_punct_token(std::string_view w) {
    return !w.empty() && std::none_of(w.begin(), w.end(), [](char c) {
        return static_cast<unsigned char>(c) >= 0x80 || std::isalnum(static_cast<unsigned char>(c));
    });
}

enum class VerbForm { None, Base, ThirdPerson, Past, Gerund };

bool doubled_consonant_base(std::string_view stem, std::string& base) {
    if (stem.size() >= 3 && stem[stem.size() - 1] == stem[stem.size() - 2]) {
        base = std::string(stem.substr(0, stem.size() - 1));
        return kVerbBases.contains(base);
    }
    return false;
}

VerbForm verb_form(std::string_view w) {
    if (kNounExceptions.contains(w)) return VerbForm::None;
    if (kVerbBases.contains(w)) return VerbForm::Base;
    if (kIrregularForms.contains(w)) return VerbForm::Past;
    std::string base;
    auto known = [&](std::string candidate) {
        base = std::move(candidate);
        return kVerbBases.contains(base);
    };
    if (w.size() > 3 && w.ends_with("ing")) {
        const auto stem = w.substr(0, w.size() - 3);
        if (known(std::string(stem)) || known(std::string(stem) + "e") || doubled_consonant_base(stem, base))
            return VerbForm::Gerund;
        return w.size() > 5 ? VerbForm::Gerund : VerbForm::None;
    }
    if (w.size() > 3 && w.ends_with("ed")) {
        const auto stem = w.substr(0, w.size() - 2);
        if (known(std::string(stem)) || known(std::string(w.substr(0, w.size() - 1))) ||
            doubled_consonant_base(stem, base) || (w.ends_with("ied") && known(std::string(w.substr(0, w.size() - 3)) + "y")))
            return VerbForm::Past;
        return w.size() > 4 ? VerbForm::Past : VerbForm::None;
    }
    if (w.size() > 2 && w.ends_with('s')) {
        if (known(std::string(w.substr(0, w.size() - 1)))) return VerbForm::ThirdPerson;
        if (w.ends_with("es") && known(std::string(w.substr(0, w.size() - 2)))) return VerbForm::ThirdPerson;
        if (w.ends_with("ies") && known(std::string(w.substr(0, w.size() - 3)) + "y")) return VerbForm::ThirdPerson;
    }
    return VerbForm::None;
}

bool adjective_by_suffix(std::string_view w) {
    for (std::string_view s : {"ful", "ous", "ive", "able", "ible", "less", "ish"})
        if (w.size() > s.size() + 2 && w.ends_with(s)) return true;
    return false;
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    std::size_t i = 0;
    auto emit = [&](std::size_t end) {
        std::string s = trim(text.substr(start, end - start));
        if (!s.empty()) out.push_back(std::move(s));
    };
    while (i < text.size()) {
        if (!is_terminator(text[i])) {
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end < text.size() && is_terminator(text[end])) ++end;
        while (end < text.size() && is_closing(text[end])) ++end;
        std::size_t next = end;
        while (next < text.size() && is_ws(text[next])) ++next;
        if (next == end || next >= text.size() || !starts_sentence(text, next)) {
            i = end;
            continue;
        }
        if (text[i] == '.') {
            std::size_t word_start = i;
            while (word_start > start && !is_ws(text[word_start - 1])) --word_start;
            std::string word = to_lower(text.substr(word_start, i + 1 - word_start));
            const auto first = word.find_first_not_of("\"'([");
            if (first != std::string::npos) word.erase(0, first);
            if (kAbbreviations.contains(word)) {
                i = end;
                continue;
            }
        }
        emit(end);
        start = next;
        i = next;
    }
    emit(text.size());
    return out;
}

std::vector<SentenceScore> score_sentences(std::string_view text) {
    const auto sentences = split_sentences(text);
    std::vector<std::vector<std::string>> words;
    std::map<std::string, std::size_t> frequency;
    for (const auto& s : sentences) {
        words.push_back(core_words(s));
        for (const auto& w : words.back()) ++frequency[w];
    }
    std::vector<SentenceScore> out;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        double score = 0.0;
        for (const auto& w : words[i]) score += static_cast<double>(frequency[w]);
        out.push_back({sentences[i], i, score});
    }
    return out;
}

std::string summarize_one(std::string_view text) {
    if (trim(text).empty()) throw std::invalid_argument("summarize_one: empty text");
    const auto scores = score_sentences(text);
    if (scores.size() == 1) return scores.front().sentence;
    const SentenceScore* best = &scores.front();
    for (const auto& s : scores)
        if (s.score > best->score) best = &s;
    return best->sentence;
}

std::vector<std::string> BaselineAnalyzer::tag(const std::vector<std::string>& tokens) const {
    std::vector<std::string> tags;
    tags.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string w = to_lower(tokens[i]);
        const std::string prev = tags.empty() ? std::string{} : tags.back();
        const std::string prev_word = i == 0 ? std::string{} : to_lower(tokens[i - 1]);
        const std::string next_word = i + 1 < tokens.size() ? to_lower(tokens[i + 1]) : std::string{};

        std::string t;
        if (is_punct_token(w)) t = "PUNCT";
        else if (w == "n't" || w == "not") t = "PART";
        else if (w == "'s") {
            const bool pronoun_before = prev == "PRON" || prev_word == "that" || prev_word == "what" ||
                                        prev_word == "here" || prev_word == "who";
            t = pronoun_before ? "AUX" : "PART";
        } else if (w == "to") {
            t = verb_form(next_word) == VerbForm::Base || kAuxiliaries.contains(next_word) ? "PART" : "ADP";
        } else if (kAuxiliaries.contains(w)) t = "AUX";
        else if (is_number(w)) t = "NUM";
        else if (kDeterminers.contains(w)) t = "DET";
        else if (kPronouns.contains(w)) t = "PRON";
        else if (kCoordinators.contains(w)) t = "CCONJ";
        else if (kSubordinators.contains(w)) t = "SCONJ";
        else if (w == "like" && prev != "PRON" && prev != "NOUN" && prev != "AUX" && prev != "ADV" && prev != "PART") t = "ADP";
        else if (kAdpositions.contains(w)) t = "ADP";
        else if (kInterjections.contains(w) && (i == 0 || prev == "PUNCT")) t = "INTJ";
        else if (kAdverbs.contains(w)) t = "ADV";
        else if (const VerbForm form = verb_form(w);
                 form != VerbForm::None && (!kAdjectives.contains(w) || prev == "PRON" || prev == "NOUN")) {
            const bool nominal_context = prev == "DET" || prev == "ADJ" || prev == "NUM" ||
                                         (prev == "ADP" && prev_word != "to") || (prev == "PART" && prev_word == "'s");
            if (nominal_context) t = form == VerbForm::Past ? "ADJ" : "NOUN";
            else if (prev.empty() && form == VerbForm::ThirdPerson) t = "NOUN";
            else t = "VERB";
        } else if (kAdjectives.contains(w) || adjective_by_suffix(w)) t = "ADJ";
        else if (w.size() > 3 && w.ends_with("ly")) t = "ADV";
        else if (kInterjections.contains(w)) t = "INTJ";
        else t = "NOUN";
        tags.push_back(std::move(t));
    }
    return tags;
}

SyntaxAnalysis BaselineAnalyzer::analyze(std::string_view sentence) const {
    const auto tokens = tokenize(sentence);
    if (tokens.empty()) return {"X", std::nullopt};
    const auto tags = tag(tokens);

    auto lower = [&](std::size_t i) { return to_lower(tokens[i]); };
    auto finite = [&](std::size_t i) {
        if (tags[i] == "AUX") return !kNonFiniteAux.contains(lower(i));
        if (tags[i] != "VERB") return false;
        if (i > 0 && tags[i - 1] == "PART" && lower(i - 1) == "to") return false;
        const VerbForm form = verb_form(lower(i));
        if (form == VerbForm::Gerund) {
            // A sentence-initial gerund heads the clause ("Starting a new job today").
            return i == 0 || tags[i - 1] == "AUX";
        }
        return true;
    };

    bool subordinate = false;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tags[i] == "SCONJ") {
            subordinate = true;
            continue;
        }
        if (tags[i] == "PUNCT" && (tokens[i] == "," || tokens[i] == ";" || tokens[i] == ":")) {
            subordinate = false;
            continue;
        }
        if (subordinate || !finite(i)) continue;
        if (tags[i] == "AUX") {
            // Auxiliary chain: the main verb it supports is the root, else the copula.
            for (std::size_t j = i + 1; j < tokens.size() && j <= i + 4; ++j) {
                if (tags[j] == "VERB") return {"VERB", j};
                if (tags[j] != "ADV" && tags[j] != "PART" && tags[j] != "AUX" && tags[j] != "PRON") break;
            }
        }
        return {tags[i], i};
    }
    for (std::size_t i = 0; i < tokens.size(); ++i)
        if (tags[i] == "VERB" || tags[i] == "AUX") return {tags[i], i};
    for (std::string_view wanted : {"NOUN", "ADJ", "PRON", "INTJ"})
        for (std::size_t i = 0; i < tokens.size(); ++i)
            if (tags[i] == wanted) return {tags[i], i};
    return {tags.front(), std::size_t{0}};
}

ExternalAnalyzer::ExternalAnalyzer(std::string command)
    : command_(std::move(command)), process_(std::make_unique<LineProcess>(command_)) {}

ExternalAnalyzer::~ExternalAnalyzer() = default;

SyntaxAnalysis ExternalAnalyzer::analyze(std::string_view sentence) const {
    std::lock_guard lock(mutex_);
    std::string reply;
    try {
        reply = process_->request(sentence);
    } catch (const std::exception& e) {
        throw AnalysisError(std::string("external analyzer failed: ") + e.what());
    }
    constexpr std::string_view prefix = "root_pos=";
    if (!reply.starts_with(prefix)) throw AnalysisError("external analyzer sent unexpected reply: " + reply);
    std::string tag = trim(reply.substr(prefix.size()));
    if (tag.empty()) throw AnalysisError("external analyzer sent an empty tag");
    for (auto& c : tag) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return {tag, std::nullopt};
}

std::unique_ptr<SyntaxAnalyzer> make_analyzer(std::string_view spec) {
    if (spec == "baseline") return std::make_unique<BaselineAnalyzer>();
    constexpr std::string_view external = "external:";
    if (spec.starts_with(external) && spec.size() > external.size())
        return std::make_unique<ExternalAnalyzer>(std::string(spec.substr(external.size())));
    throw std::invalid_argument("unknown analyzer: " + std::string(spec));
}

bool is_verbal_tag(std::string_view tag) { return tag == "VERB" || tag == "AUX"; }

bool root_is_verb(std::string_view sentence, const SyntaxAnalyzer& analyzer) {
    if (trim(sentence).empty()) throw std::invalid_argument("root_is_verb: empty sentence");
    return is_verbal_tag(analyzer.analyze(sentence).root_tag);
}

std::optional<SpeakerDerivation> derive_speaker_utterance(std::string_view title, std::string_view body,
                                                          const SyntaxAnalyzer& analyzer,
                                                          const ValidationOptions& validation) {
    auto attempt = [&](std::string_view text) -> std::optional<std::string> {
        if (trim(text).empty()) return std::nullopt;
        std::string sentence = summarize_one(text);
        if (!std::holds_alternative<std::string>(validate(sentence, validation))) return std::nullopt;
        if (!root_is_verb(sentence, analyzer)) return std::nullopt;
        return sentence;
    };
    if (auto s = attempt(title)) return SpeakerDerivation{std::move(*s), SpeakerSource::Title};
    if (auto s = attempt(body)) return SpeakerDerivation{std::move(*s), SpeakerSource::Body};
    return std::nullopt;
}

}  // namespace afec
