#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fewstab/dataset.hpp"

// Turns externally produced image captions into attribute sets. Captioning
// itself happens upstream; this module only selects informative words
// (nouns and adjectives) via a lexicon lookup, and measures how well two
// annotation runs agree.

namespace fewstab {

struct CaptionRecord {
    std::string id;
    std::string caption;
};

// Part-of-speech lexicon: lowercase word -> tag set over {NOUN, ADJ}.
class Lexicon {
  public:
    static constexpr std::uint8_t kNoun = 1;
    static constexpr std::uint8_t kAdj = 2;

    void add(std::string word, std::uint8_t tags);
    // A token counts as an attribute if the lexicon tags it NOUN or ADJ
    // (words carrying both tags count once; attributes are a set).
    bool is_attribute(const std::string& word) const;
    std::size_t size() const { return words_.size(); }

    // lexicon-tsv: `word<TAB>TAG` per line, TAG in {NOUN, ADJ}. A word may
    // appear on multiple lines; tags accumulate.
    static Lexicon parse_tsv(std::istream& in, const std::string& source_name);
    static Lexicon load_tsv(const std::filesystem::path& path);

  private:
    std::unordered_map<std::string, std::uint8_t> words_;
};

struct ExtractOptions {
    // Off by default: when set, a token absent from the lexicon but whose
    // trailing-'s'-stripped stem is present matches the stem.
    bool strip_plural_s = false;
};

// Tokenizes by splitting on any non-alphabetic byte, lowercases, and keeps
// tokens the lexicon tags NOUN or ADJ. Returns a sorted, deduplicated set.
std::vector<std::string> extract_attributes(std::string_view caption, const Lexicon& lexicon,
                                            const ExtractOptions& options = {});

// One SampleRecord per caption, attributes from extract_attributes, no
// embeddings. Every caption id must have a label; offenders are listed.
DatasetSplit annotate_split(const std::vector<CaptionRecord>& captions,
                            const std::unordered_map<std::string, std::string>& labels,
                            const Lexicon& lexicon, const ExtractOptions& options = {});

struct AgreementScore {
    double value = 0.0;  // in [0, 1]
    std::size_t images_scored = 0;
    std::size_t images_skipped = 0;  // empty reference attribute set
};

// Cross-annotator detection accuracy: mean over samples of
// |query attrs ∩ ref attrs| / |ref attrs|, skipping samples whose reference
// set is empty. Not symmetric in its arguments. The two splits must cover
// the same sample ids. value is 0 when every image is skipped.
AgreementScore agreement(const DatasetSplit& query_split, const DatasetSplit& ref_split);

// captions-jsonl: {"id", "caption"} per line.
std::vector<CaptionRecord> parse_captions_jsonl(std::istream& in, const std::string& source_name);
std::vector<CaptionRecord> load_captions(const std::filesystem::path& path);

// labels-jsonl: {"id", "class"} per line.
std::unordered_map<std::string, std::string> parse_labels_jsonl(std::istream& in,
                                                                const std::string& source_name);
std::unordered_map<std::string, std::string> load_labels(const std::filesystem::path& path);

}  // namespace fewstab
