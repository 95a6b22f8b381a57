#include "fewstab/captions.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "fewstab/errors.hpp"
#include "json.hpp"

namespace fewstab {

void Lexicon::add(std::string word, std::uint8_t tags) {
    if (word.empty()) throw ValidationError("empty lexicon word");
    if (tags == 0) throw ValidationError("lexicon word '" + word + "' has no tags");
    for (char& c : word)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    words_[std::move(word)] |= tags;
}

bool Lexicon::is_attribute(const std::string& word) const {
    auto it = words_.find(word);
    return it != words_.end() && (it->second & (kNoun | kAdj)) != 0;
}

Lexicon Lexicon::parse_tsv(std::istream& in, const std::string& source_name) {
    Lexicon lex;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            std::ostringstream msg;
            msg << source_name << ":" << line_no << ": expected `word<TAB>TAG`";
            throw ValidationError(msg.str());
        }
        const std::string word = line.substr(0, tab);
        const std::string tag = line.substr(tab + 1);
        std::uint8_t bit = 0;
        if (tag == "NOUN") bit = kNoun;
        else if (tag == "ADJ") bit = kAdj;
        else {
            std::ostringstream msg;
            msg << source_name << ":" << line_no << ": unknown tag '" << tag << "'";
            throw ValidationError(msg.str());
        }
        lex.add(word, bit);
    }
    return lex;
}

Lexicon Lexicon::load_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open lexicon file '" + path.string() + "'");
    return parse_tsv(in, path.string());
}

std::vector<std::string> extract_attributes(std::string_view caption, const Lexicon& lexicon,
                                            const ExtractOptions& options) {
    std::set<std::string> found;
    std::string token;
    auto flush = [&] {
        if (token.empty()) return;
        if (lexicon.is_attribute(token)) {
            found.insert(token);
        } else if (options.strip_plural_s && token.size() > 1 && token.back() == 's') {
            std::string stem = token.substr(0, token.size() - 1);
            if (lexicon.is_attribute(stem)) found.insert(std::move(stem));
        }
        token.clear();
    };
    for (char c : caption) {
        if (c >= 'a' && c <= 'z') token.push_back(c);
        else if (c >= 'A' && c <= 'Z') token.push_back(static_cast<char>(c - 'A' + 'a'));
        else flush();  // digits, punctuation, anything non-alphabetic separates
    }
    flush();
    return {found.begin(), found.end()};
}

DatasetSplit annotate_split(const std::vector<CaptionRecord>& captions,
                            const std::unordered_map<std::string, std::string>& labels,
                            const Lexicon& lexicon, const ExtractOptions& options) {
    std::vector<std::string> missing;
    for (const auto& cap : captions) {
        if (cap.id.empty()) throw ValidationError("caption with empty id");
        if (!labels.contains(cap.id)) missing.push_back(cap.id);
    }
    if (!missing.empty()) {
        std::sort(missing.begin(), missing.end());
        std::ostringstream msg;
        msg << "missing labels for " << missing.size() << " caption id(s):";
        for (const auto& id : missing) msg << " " << id;
        throw ValidationError(msg.str());
    }
    std::vector<SampleRecord> records;
    records.reserve(captions.size());
    for (const auto& cap : captions) {
        SampleRecord rec;
        rec.id = cap.id;
        rec.class_id = labels.at(cap.id);
        rec.attributes = extract_attributes(cap.caption, lexicon, options);
        records.push_back(std::move(rec));
    }
    return DatasetSplit::from_records(std::move(records));
}

AgreementScore agreement(const DatasetSplit& query_split, const DatasetSplit& ref_split) {
    if (query_split.size() != ref_split.size())
        throw ValidationError("sample id mismatch: splits have different sizes");
    for (const auto& sample : ref_split.samples()) {
        if (!query_split.sample_index(sample.id))
            throw ValidationError("sample id mismatch: '" + sample.id +
                                  "' present in reference split only");
    }

    AgreementScore score;
    double total = 0.0;
    for (const auto& ref : ref_split.samples()) {
        if (ref.attrs.empty()) {
            ++score.images_skipped;
            continue;
        }
        const auto& query =
            query_split.samples()[*query_split.sample_index(ref.id)];
        std::size_t overlap = 0;
        for (std::uint32_t a : ref.attrs) {
            if (query.has_attribute(query_split.attribute_or_none(ref_split.attribute_name(a))))
                ++overlap;
        }
        total += static_cast<double>(overlap) / static_cast<double>(ref.attrs.size());
        ++score.images_scored;
    }
    if (score.images_scored > 0) score.value = total / static_cast<double>(score.images_scored);
    return score;
}

namespace {

nlohmann::json parse_line(const std::string& line, const std::string& source_name,
                          std::size_t line_no) {
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        std::ostringstream msg;
        msg << source_name << ":" << line_no << ": " << e.what();
        throw ValidationError(msg.str());
    }
}

}  // namespace

std::vector<CaptionRecord> parse_captions_jsonl(std::istream& in, const std::string& source_name) {
    std::vector<CaptionRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto obj = parse_line(line, source_name, line_no);
        try {
            out.push_back({obj.at("id").get<std::string>(), obj.at("caption").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            std::ostringstream msg;
            msg << source_name << ":" << line_no << ": bad record: " << e.what();
            throw ValidationError(msg.str());
        }
    }
    return out;
}

std::vector<CaptionRecord> load_captions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open captions file '" + path.string() + "'");
    return parse_captions_jsonl(in, path.string());
}

std::unordered_map<std::string, std::string> parse_labels_jsonl(std::istream& in,
                                                                const std::string& source_name) {
    std::unordered_map<std::string, std::string> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto obj = parse_line(line, source_name, line_no);
        try {
            const auto id = obj.at("id").get<std::string>();
            const auto cls = obj.at("class").get<std::string>();
            if (!out.emplace(id, cls).second) {
                std::ostringstream msg;
                msg << source_name << ":" << line_no << ": duplicate label for id '" << id << "'";
                throw ValidationError(msg.str());
            }
        } catch (const nlohmann::json::exception& e) {
            std::ostringstream msg;
            msg << source_name << ":" << line_no << ": bad record: " << e.what();
            throw ValidationError(msg.str());
        }
    }
    return out;
}

std::unordered_map<std::string, std::string> load_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open labels file '" + path.string() + "'");
    return parse_labels_jsonl(in, path.string());
}

}  // namespace fewstab
