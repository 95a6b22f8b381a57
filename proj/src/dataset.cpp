#include "fewstab/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "fewstab/errors.hpp"
#include "json.hpp"

namespace fewstab {

namespace {

std::string lowercase_ascii(std::string s) {
    for (char& c : s) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return s;
}

bool has_whitespace(const std::string& s) {
    return std::any_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

bool DatasetSplit::Sample::has_attribute(std::uint32_t attr) const {
    if (attr == kAttrNone) return false;
    return std::binary_search(attrs.begin(), attrs.end(), attr);
}

DatasetSplit DatasetSplit::from_records(std::vector<SampleRecord> records) {
    DatasetSplit split;

    // Canonical name tables first: sorted classes and vocabulary give stable
    // indices independent of record order.
    std::set<std::string> class_names;
    std::set<std::string> attr_names;
    std::set<std::string> seen_ids;
    for (auto& rec : records) {
        if (rec.id.empty()) throw ValidationError("sample with empty id");
        if (!seen_ids.insert(rec.id).second)
            throw ValidationError("duplicate sample id '" + rec.id + "'");
        if (rec.class_id.empty())
            throw ValidationError("sample '" + rec.id + "' has empty class id");
        class_names.insert(rec.class_id);
        for (auto& attr : rec.attributes) {
            attr = lowercase_ascii(std::move(attr));
            if (attr.empty())
                throw ValidationError("sample '" + rec.id + "' has an empty attribute string");
            if (has_whitespace(attr))
                throw ValidationError("sample '" + rec.id + "' has attribute '" + attr +
                                      "' containing whitespace");
            attr_names.insert(attr);
        }
    }

    split.classes_.assign(class_names.begin(), class_names.end());
    split.vocabulary_.assign(attr_names.begin(), attr_names.end());
    for (std::uint32_t i = 0; i < split.classes_.size(); ++i)
        split.class_lookup_.emplace(split.classes_[i], i);
    for (std::uint32_t i = 0; i < split.vocabulary_.size(); ++i)
        split.attr_lookup_.emplace(split.vocabulary_[i], i);

    // Canonical storage order: ascending sample id. Sample indices then sort
    // the same way as ids, which downstream selection relies on.
    std::sort(records.begin(), records.end(),
              [](const SampleRecord& a, const SampleRecord& b) { return a.id < b.id; });

    split.samples_.reserve(records.size());
    for (auto& rec : records) {
        Sample s;
        s.id = std::move(rec.id);
        s.class_idx = split.class_lookup_.at(rec.class_id);
        s.attrs.reserve(rec.attributes.size());
        for (const auto& attr : rec.attributes) s.attrs.push_back(split.attr_lookup_.at(attr));
        std::sort(s.attrs.begin(), s.attrs.end());
        s.attrs.erase(std::unique(s.attrs.begin(), s.attrs.end()), s.attrs.end());
        if (rec.embedding) {
            if (rec.embedding->empty())
                throw ValidationError("sample '" + s.id + "' has an empty embedding");
            if (!split.embedding_dim_) {
                if (!split.samples_.empty())
                    throw ValidationError("sample '" + s.id +
                                          "' has an embedding but earlier samples do not");
                split.embedding_dim_ = rec.embedding->size();
            } else if (rec.embedding->size() != *split.embedding_dim_) {
                std::ostringstream msg;
                msg << "embedding dimension mismatch at sample '" << s.id << "': got "
                    << rec.embedding->size() << ", expected " << *split.embedding_dim_;
                throw ValidationError(msg.str());
            }
            s.embedding = std::move(*rec.embedding);
        } else if (split.embedding_dim_) {
            throw ValidationError("sample '" + s.id +
                                  "' lacks an embedding but earlier samples have one");
        }
        split.sample_lookup_.emplace(s.id, static_cast<std::uint32_t>(split.samples_.size()));
        split.samples_.push_back(std::move(s));
    }

    split.by_class_.resize(split.classes_.size());
    for (std::uint32_t i = 0; i < split.samples_.size(); ++i)
        split.by_class_[split.samples_[i].class_idx].push_back(i);
    return split;
}

std::optional<std::uint32_t> DatasetSplit::class_index(std::string_view name) const {
    auto it = class_lookup_.find(std::string(name));
    if (it == class_lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::uint32_t> DatasetSplit::attribute_index(std::string_view name) const {
    auto it = attr_lookup_.find(std::string(name));
    if (it == attr_lookup_.end()) return std::nullopt;
    return it->second;
}

std::uint32_t DatasetSplit::require_class(std::string_view name) const {
    if (auto idx = class_index(name)) return *idx;
    throw ValidationError("unknown class '" + std::string(name) + "'");
}

std::uint32_t DatasetSplit::attribute_or_none(std::string_view name) const {
    return attribute_index(name).value_or(kAttrNone);
}

std::span<const std::uint32_t> DatasetSplit::class_sample_indices(std::uint32_t class_idx) const {
    return by_class_.at(class_idx);
}

std::optional<std::uint32_t> DatasetSplit::sample_index(std::string_view sample_id) const {
    auto it = sample_lookup_.find(std::string(sample_id));
    if (it == sample_lookup_.end()) return std::nullopt;
    return it->second;
}

SampleRecord DatasetSplit::to_record(std::uint32_t sample_idx) const {
    const Sample& s = samples_.at(sample_idx);
    SampleRecord rec;
    rec.id = s.id;
    rec.class_id = classes_[s.class_idx];
    rec.attributes.reserve(s.attrs.size());
    for (std::uint32_t a : s.attrs) rec.attributes.push_back(vocabulary_[a]);
    if (embedding_dim_) rec.embedding = s.embedding;
    return rec;
}

DatasetSplit parse_split_jsonl(std::istream& in, const std::string& source_name) {
    std::vector<SampleRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            std::ostringstream msg;
            msg << source_name << ":" << line_no << ": " << e.what();
            throw ValidationError(msg.str());
        }
        try {
            SampleRecord rec;
            rec.id = obj.at("id").get<std::string>();
            rec.class_id = obj.at("class").get<std::string>();
            for (const auto& a : obj.at("attributes"))
                rec.attributes.push_back(a.get<std::string>());
            if (obj.contains("embedding"))
                rec.embedding = obj.at("embedding").get<std::vector<double>>();
            records.push_back(std::move(rec));
        } catch (const nlohmann::json::exception& e) {
            std::ostringstream msg;
            msg << source_name << ":" << line_no << ": bad record: " << e.what();
            throw ValidationError(msg.str());
        }
    }
    try {
        return DatasetSplit::from_records(std::move(records));
    } catch (const ValidationError& e) {
        throw ValidationError(source_name + ": " + e.what());
    }
}

DatasetSplit load_split(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open dataset file '" + path.string() + "'");
    return parse_split_jsonl(in, path.string());
}

void write_split_jsonl(const DatasetSplit& split, std::ostream& out) {
    for (std::uint32_t i = 0; i < split.size(); ++i) {
        const SampleRecord rec = split.to_record(i);
        nlohmann::json obj;
        obj["id"] = rec.id;
        obj["class"] = rec.class_id;
        obj["attributes"] = rec.attributes;
        if (rec.embedding) obj["embedding"] = *rec.embedding;
        out << obj.dump() << '\n';
    }
}

std::vector<SampleRecord> class_samples(const DatasetSplit& split, std::string_view class_id) {
    const std::uint32_t c = split.require_class(class_id);
    std::vector<SampleRecord> out;
    for (std::uint32_t idx : split.class_sample_indices(c)) out.push_back(split.to_record(idx));
    return out;
}

SplitStats split_stats(const DatasetSplit& split) {
    SplitStats stats;
    stats.unique_attribute_count = split.vocabulary().size();
    if (split.classes().empty()) return stats;
    double total = 0.0;
    for (std::uint32_t c = 0; c < split.classes().size(); ++c) {
        std::set<std::uint32_t> distinct;
        for (std::uint32_t idx : split.class_sample_indices(c)) {
            const auto& attrs = split.samples()[idx].attrs;
            distinct.insert(attrs.begin(), attrs.end());
        }
        total += static_cast<double>(distinct.size());
    }
    stats.avg_attributes_per_class = total / static_cast<double>(split.classes().size());
    return stats;
}

}  // namespace fewstab
