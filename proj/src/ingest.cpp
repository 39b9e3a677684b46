#include "tracekg/ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tracekg/text.hpp"

namespace tracekg::ingest {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 24> kAbbreviations = {
    "e.g.", "i.e.", "etc.", "vs.", "cf.", "al.",  "approx.", "dr.", "mr.", "mrs.", "ms.",  "prof.",
    "inc.", "ltd.", "co.",  "corp.", "st.", "no.", "fig.",    "eq.", "sec.", "vol.", "jr.", "sr.",
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

// True if the word ending at `end` (exclusive, the terminal '.' included)
// is a known abbreviation or a dotted initialism such as "I.B.M.".
bool ends_with_abbreviation(const std::string& s, std::size_t end) {
    std::size_t b = end;
    while (b > 0 && !is_space(s[b - 1])) --b;
    std::string word = text::to_lower(std::string_view(s).substr(b, end - b));
    while (!word.empty() && (word.front() == '(' || word.front() == '"')) word.erase(word.begin());
    for (auto a : kAbbreviations)
        if (word == a) return true;
    // initialisms: inner period present, or a single capital letter ("J.")
    if (word.size() >= 2 && word.find('.') < word.size() - 1) return true;
    if (word.size() == 2 && std::isalpha(static_cast<unsigned char>(word[0]))) return true;
    return false;
}

std::string read_file(const fs::path& path, const std::string& doc_id) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError(doc_id, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

std::optional<std::string> IdentityTextualizer::describe(const RawRegion& region) {
    if (text::trim(region.text).empty()) return std::nullopt;
    return region.text;
}

std::optional<std::string> StubTextualizer::describe(const RawRegion& region) {
    if (text::trim(region.text).empty()) return std::nullopt;
    return upper(to_string(region.kind)) + ": " + text::trim(region.text);
}

std::optional<std::string> CommandTextualizer::describe(const RawRegion& region) {
    const auto tmp = fs::temp_directory_path() / ("tracekg_region_" + text::hex64(text::fnv1a64(region.region + region.image_ref + region.text)) + ".json");
    {
        std::ofstream out(tmp);
        out << json{{"kind", to_string(region.kind)},
                    {"text", region.text},
                    {"image_ref", region.image_ref},
                    {"page", region.page ? json(*region.page) : json(nullptr)},
                    {"region", region.region}}
                   .dump();
    }
    const std::string cmd = command_ + " '" + tmp.string() + "'";
    std::FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return std::nullopt;
    std::string output;
    std::array<char, 4096> buf{};
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) output.append(buf.data(), n);
    const int rc = ::pclose(pipe);
    fs::remove(tmp);
    if (rc != 0 || text::trim(output).empty()) return std::nullopt;
    return text::trim(output);
}

std::unique_ptr<Textualizer> make_textualizer(const std::string& spec) {
    if (spec == "identity") return std::make_unique<IdentityTextualizer>();
    if (spec == "stub") return std::make_unique<StubTextualizer>();
    constexpr std::string_view prefix = "command:";
    if (spec.rfind(prefix, 0) == 0) return std::make_unique<CommandTextualizer>(spec.substr(prefix.size()));
    throw Error("unknown textualizer '" + spec + "' (expected identity | stub | command:<cmd>)");
}

RawDocument load_document(const fs::path& path) {
    RawDocument doc;
    doc.doc_id = path.stem().string();
    doc.source = path.string();
    const std::string content = read_file(path, doc.doc_id);
    if (path.extension() != ".json") {
        doc.regions.push_back({ElementKind::Narrative, content, {}, std::nullopt, {}});
        return doc;
    }
    json j;
    try {
        j = json::parse(content);
    } catch (const json::exception& e) {
        throw IngestError(doc.doc_id, std::string("malformed region document: ") + e.what());
    }
    if (j.contains("doc_id")) doc.doc_id = j.at("doc_id").get<std::string>();
    for (const auto& s : j.value("segments", json::array())) {
        RawRegion r;
        r.kind = element_kind_from_string(s.value("kind", "narrative"));
        r.text = s.value("text", "");
        r.image_ref = s.value("image_ref", "");
        if (s.contains("provenance")) {
            const auto& p = s.at("provenance");
            if (p.contains("page") && !p.at("page").is_null()) r.page = p.at("page").get<int>();
            r.region = p.value("region", "");
        }
        doc.regions.push_back(std::move(r));
    }
    return doc;
}

DocumentStream textualize(const RawDocument& document, Textualizer& textualizer) {
    bool any = false;
    for (const auto& r : document.regions)
        if (!text::trim(r.text).empty() || !r.image_ref.empty()) any = true;
    if (!any) throw IngestError(document.doc_id, "empty document");

    DocumentStream stream{document.doc_id, {}};
    std::size_t ordinal = 0;
    for (const auto& r : document.regions) {
        ++ordinal;
        SourceRegion prov{document.source, r.page, r.region, r.kind};
        if (r.kind == ElementKind::Narrative) {
            if (text::trim(r.text).empty()) continue;
            stream.segments.push_back({r.text, std::move(prov)});
            continue;
        }
        if (prov.region.empty()) prov.region = "region-" + std::to_string(ordinal);
        auto described = textualizer.describe(r);
        std::string body = described ? *described
                                     : "[" + upper(to_string(r.kind)) + " " + (r.image_ref.empty() ? prov.region : r.image_ref) + "]";
        stream.segments.push_back({std::move(body), std::move(prov)});
    }
    return stream;
}

std::vector<std::string> split_sentences(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    auto emit = [&](std::size_t end) {
        auto sentence = text::trim(std::string_view(s).substr(start, end - start));
        if (!sentence.empty()) out.push_back(std::move(sentence));
        start = end;
    };
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c != '.' && c != '!' && c != '?') continue;
        std::size_t end = i + 1;
        while (end < s.size() && (is_closer(s[end]) || s[end] == '.' || s[end] == '!' || s[end] == '?')) ++end;
        if (end < s.size() && !is_space(s[end])) continue;
        std::size_t next = end;
        while (next < s.size() && is_space(s[next])) ++next;
        if (next < s.size()) {
            const unsigned char n = static_cast<unsigned char>(s[next]);
            if (!(std::isupper(n) || std::isdigit(n) || n == '"' || n == '(' || n == '[')) continue;
        }
        if (c == '.' && ends_with_abbreviation(s, i + 1)) continue;
        emit(end);
        i = end - 1;
    }
    emit(s.size());
    return out;
}

std::size_t count_tokens(const std::string& s) { return text::whitespace_tokens(s).size(); }

std::string chunk_id(const std::string& doc_id, std::size_t ordinal) { return doc_id + "_C" + text::pad(ordinal, 4); }

std::vector<Chunk> chunk(const DocumentStream& stream, std::size_t min_tokens, std::size_t max_tokens) {
    if (min_tokens > max_tokens) throw Error("chunk: min_tokens must not exceed max_tokens");

    struct Sentence {
        std::string text;
        std::size_t tokens;
        const SourceRegion* prov;
    };
    std::vector<Sentence> sentences;
    for (const auto& seg : stream.segments)
        for (auto& s : split_sentences(seg.text)) {
            const std::size_t n = count_tokens(s);
            sentences.push_back({std::move(s), n, &seg.provenance});
        }

    std::vector<Chunk> chunks;
    std::vector<const Sentence*> current;
    std::size_t current_tokens = 0;
    auto flush = [&] {
        if (current.empty()) return;
        Chunk c;
        c.id = chunk_id(stream.doc_id, chunks.size());
        c.doc_id = stream.doc_id;
        std::vector<std::string> parts;
        for (const auto* s : current) {
            parts.push_back(s->text);
            if (std::find(c.provenance.begin(), c.provenance.end(), *s->prov) == c.provenance.end())
                c.provenance.push_back(*s->prov);
        }
        c.text = text::join(parts, " ");
        c.token_count = current_tokens;
        chunks.push_back(std::move(c));
        current.clear();
        current_tokens = 0;
    };

    for (const auto& s : sentences) {
        if (s.tokens > max_tokens) {
            flush();
            current.push_back(&s);
            current_tokens = s.tokens;
            flush();
            continue;
        }
        if (current_tokens + s.tokens > max_tokens) flush();
        current.push_back(&s);
        current_tokens += s.tokens;
        if (current_tokens >= min_tokens) flush();
    }
    flush();
    return chunks;
}

}  // namespace tracekg::ingest
