#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "fewstab/dataset.hpp"

namespace fewstab::test {

struct Row {
    std::string id;
    std::string class_id;
    std::vector<std::string> attrs;
    std::vector<double> embedding = {};
};

inline DatasetSplit make_split(std::initializer_list<Row> rows) {
    std::vector<SampleRecord> records;
    for (const auto& row : rows) {
        SampleRecord rec;
        rec.id = row.id;
        rec.class_id = row.class_id;
        rec.attributes = row.attrs;
        if (!row.embedding.empty()) rec.embedding = row.embedding;
        records.push_back(std::move(rec));
    }
    return DatasetSplit::from_records(std::move(records));
}

}  // namespace fewstab::test
