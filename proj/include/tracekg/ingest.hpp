#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "tracekg/model.hpp"

namespace tracekg::ingest {

class IngestError : public Error {
public:
    IngestError(std::string doc_id, const std::string& what)
        : Error("ingest [" + doc_id + "]: " + what), doc_id_(std::move(doc_id)) {}
    const std::string& doc_id() const { return doc_id_; }

private:
    std::string doc_id_;
};

// One region of a raw document before textualization. Non-narrative regions
// may carry only an image reference.
struct RawRegion {
    ElementKind kind = ElementKind::Narrative;
    std::string text;
    std::string image_ref;
    std::optional<int> page;
    std::string region;
};

struct RawDocument {
    std::string doc_id;
    std::string source;
    std::vector<RawRegion> regions;
};

struct Segment {
    std::string text;
    SourceRegion provenance;
};

struct DocumentStream {
    std::string doc_id;
    std::vector<Segment> segments;
};

// Converts a non-narrative region into text.
class Textualizer {
public:
    virtual ~Textualizer() = default;
    virtual std::string name() const = 0;
    // Returns std::nullopt when the plug cannot describe the region; the
    // caller then emits a placeholder segment.
    virtual std::optional<std::string> describe(const RawRegion& region) = 0;
};

// Passes region text through unchanged.
class IdentityTextualizer final : public Textualizer {
public:
    std::string name() const override { return "identity"; }
    std::optional<std::string> describe(const RawRegion& region) override;
};

// Renders regions as "<KIND>: <text>", e.g. "TABLE: a | b".
class StubTextualizer final : public Textualizer {
public:
    std::string name() const override { return "stub"; }
    std::optional<std::string> describe(const RawRegion& region) override;
};

// Runs `command <region.json>` and uses its stdout as the description.
class CommandTextualizer final : public Textualizer {
public:
    explicit CommandTextualizer(std::string command) : command_(std::move(command)) {}
    std::string name() const override { return "command:" + command_; }
    std::optional<std::string> describe(const RawRegion& region) override;

private:
    std::string command_;
};

std::unique_ptr<Textualizer> make_textualizer(const std::string& spec);

// Reads a plain-text (.txt) or region-annotated (.json) document.
RawDocument load_document(const std::filesystem::path& path);

DocumentStream textualize(const RawDocument& document, Textualizer& textualizer);

// Rule-based splitter on terminal punctuation with an abbreviation list.
// Returned sentences are trimmed substrings of `text`, in order.
std::vector<std::string> split_sentences(const std::string& text);

std::size_t count_tokens(const std::string& text);

std::vector<Chunk> chunk(const DocumentStream& stream, std::size_t min_tokens = 100, std::size_t max_tokens = 200);

std::string chunk_id(const std::string& doc_id, std::size_t ordinal);

}  // namespace tracekg::ingest
