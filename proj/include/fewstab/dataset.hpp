#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fewstab {

// Attribute index meaning "not in this split's vocabulary". Membership tests
// against it are always false; candidate selection accepts it so callers can
// ask about attributes that never occur.
inline constexpr std::uint32_t kAttrNone = std::numeric_limits<std::uint32_t>::max();

// One annotated test image as it appears on disk: id, class label, detected
// attribute set, optional embedding.
struct SampleRecord {
    std::string id;
    std::string class_id;
    std::vector<std::string> attributes;  // sorted, unique, lowercase after ingestion
    std::optional<std::vector<double>> embedding;

    bool operator==(const SampleRecord&) const = default;
};

// An immutable test split. Classes and attributes are interned to dense
// indices; samples are stored in ascending sample-id order (so index order
// and id order agree, and every downstream selection is deterministic).
// Safe to share read-only across worker threads.
class DatasetSplit {
  public:
    struct Sample {
        std::string id;
        std::uint32_t class_idx = 0;
        std::vector<std::uint32_t> attrs;  // sorted unique attribute indices
        std::vector<double> embedding;     // empty unless the split has embeddings

        bool has_attribute(std::uint32_t attr) const;
    };

    // Validates and interns records. Throws ValidationError on duplicate ids,
    // malformed attributes, or inconsistent embedding dimensions.
    static DatasetSplit from_records(std::vector<SampleRecord> records);

    const std::vector<Sample>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }

    const std::vector<std::string>& classes() const { return classes_; }
    const std::vector<std::string>& vocabulary() const { return vocabulary_; }
    std::optional<std::size_t> embedding_dim() const { return embedding_dim_; }

    std::optional<std::uint32_t> class_index(std::string_view name) const;
    std::optional<std::uint32_t> attribute_index(std::string_view name) const;
    // Throwing lookups for contexts where the name must exist.
    std::uint32_t require_class(std::string_view name) const;
    // Unknown attribute names map to kAttrNone rather than an error.
    std::uint32_t attribute_or_none(std::string_view name) const;

    const std::string& class_name(std::uint32_t idx) const { return classes_[idx]; }
    const std::string& attribute_name(std::uint32_t idx) const { return vocabulary_[idx]; }

    // Sample indices of one class, ascending by sample id.
    std::span<const std::uint32_t> class_sample_indices(std::uint32_t class_idx) const;

    std::optional<std::uint32_t> sample_index(std::string_view sample_id) const;

    SampleRecord to_record(std::uint32_t sample_idx) const;

  private:
    std::vector<Sample> samples_;  // ascending sample id
    std::vector<std::string> classes_;
    std::vector<std::string> vocabulary_;
    std::vector<std::vector<std::uint32_t>> by_class_;
    std::unordered_map<std::string, std::uint32_t> class_lookup_;
    std::unordered_map<std::string, std::uint32_t> attr_lookup_;
    std::unordered_map<std::string, std::uint32_t> sample_lookup_;
    std::optional<std::size_t> embedding_dim_;
};

// attribute-jsonl: one {"id", "class", "attributes", "embedding"?} object per
// line, UTF-8, LF. Attribute arrays may repeat on input; deduplicated here.
DatasetSplit parse_split_jsonl(std::istream& in, const std::string& source_name);
DatasetSplit load_split(const std::filesystem::path& path);
void write_split_jsonl(const DatasetSplit& split, std::ostream& out);

// Records of one class, ascending by sample id. Throws on unknown class.
std::vector<SampleRecord> class_samples(const DatasetSplit& split, std::string_view class_id);

struct SplitStats {
    std::size_t unique_attribute_count = 0;
    double avg_attributes_per_class = 0.0;  // mean over classes of distinct attrs in the class
};

SplitStats split_stats(const DatasetSplit& split);

}  // namespace fewstab
