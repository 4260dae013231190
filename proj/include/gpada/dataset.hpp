#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "gpada/common.hpp"

namespace gpada {

enum class Domain { source, target };

inline std::string to_string(Domain d) {
    return d == Domain::source ? "source" : "target";
}

/// One sample: identity, origin domain, class, and its feature vector.
/// The target true_label is present in memory but only the oracle reads it.
struct FeatureRecord {
    SampleId id = 0;
    Domain domain = Domain::source;
    int true_label = 0;
    Vector features;
};

struct Dataset {
    std::vector<FeatureRecord> records;
    int num_classes = 0;
    int dim = 0;
    std::unordered_map<SampleId, std::size_t> id_index;

    /// Infers dim / num_classes, builds the id index and checks invariants.
    void finalize() {
        if (records.empty()) fail("dataset: no records");
        dim = static_cast<int>(records.front().features.size());
        if (dim < 1) fail("dataset: feature dimension must be >= 1");
        int max_label = 0;
        id_index.clear();
        id_index.reserve(records.size());
        for (std::size_t i = 0; i < records.size(); ++i) {
            const FeatureRecord& r = records[i];
            if (static_cast<int>(r.features.size()) != dim)
                fail("dataset: record id " + std::to_string(r.id) +
                     " has dimensionality " + std::to_string(r.features.size()) +
                     ", expected " + std::to_string(dim));
            if (!r.features.allFinite())
                fail("dataset: record id " + std::to_string(r.id) + " has non-finite feature");
            if (r.features.norm() <= 0.0)
                fail("dataset: record id " + std::to_string(r.id) + " has zero-norm feature vector");
            if (r.true_label < 0)
                fail("dataset: record id " + std::to_string(r.id) + " has negative label");
            max_label = std::max(max_label, r.true_label);
            if (!id_index.emplace(r.id, i).second)
                fail("dataset: duplicate id " + std::to_string(r.id));
        }
        num_classes = max_label + 1;
        if (num_classes < 2) fail("dataset: needs at least 2 classes");
        std::vector<char> source_seen(static_cast<std::size_t>(num_classes), 0);
        for (const FeatureRecord& r : records)
            if (r.domain == Domain::source) source_seen[static_cast<std::size_t>(r.true_label)] = 1;
        for (int c = 0; c < num_classes; ++c)
            if (!source_seen[static_cast<std::size_t>(c)])
                fail("dataset: class " + std::to_string(c) + " has no source record");
    }

    const FeatureRecord& by_id(SampleId id) const {
        auto it = id_index.find(id);
        if (it == id_index.end()) fail("dataset: unknown id " + std::to_string(id));
        return records[it->second];
    }

    std::vector<SampleId> domain_ids(Domain d) const {
        std::vector<SampleId> out;
        for (const FeatureRecord& r : records)
            if (r.domain == d) out.push_back(r.id);
        std::sort(out.begin(), out.end());
        return out;
    }
};

namespace detail {

inline double parse_double_field(const std::string& tok, std::size_t row, const char* what) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        fail("dataset row " + std::to_string(row) + ": non-numeric " + what + " '" + tok + "'");
    return v;
}

inline long long parse_int_field(const std::string& tok, std::size_t row, const char* what) {
    long long v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        fail("dataset row " + std::to_string(row) + ": non-numeric " + what + " '" + tok + "'");
    return v;
}

inline std::vector<std::string> split_csv_line(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

}  // namespace detail

/// Reads the dataset CSV: header `id,domain,label,f0,...,f{d-1}`, then one
/// record per line. All row-level problems report the 1-based row number.
inline Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("dataset: cannot open file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) fail("dataset: empty file '" + path + "'");
    std::vector<std::string> header = detail::split_csv_line(line);
    if (header.size() < 4 || header[0] != "id" || header[1] != "domain" || header[2] != "label")
        fail("dataset: malformed header in '" + path + "'");
    const int dim = static_cast<int>(header.size()) - 3;
    for (int j = 0; j < dim; ++j)
        if (header[static_cast<std::size_t>(3 + j)] != "f" + std::to_string(j))
            fail("dataset: malformed header feature column " + std::to_string(j));

    Dataset ds;
    std::size_t row = 1;  // header was row 1
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> tok = detail::split_csv_line(line);
        if (static_cast<int>(tok.size()) != 3 + dim)
            fail("dataset row " + std::to_string(row) + ": has " + std::to_string(tok.size()) +
                 " fields, expected " + std::to_string(3 + dim));
        FeatureRecord rec;
        long long id = detail::parse_int_field(tok[0], row, "id");
        if (id < 0) fail("dataset row " + std::to_string(row) + ": negative id");
        rec.id = static_cast<SampleId>(id);
        if (tok[1] == "source")
            rec.domain = Domain::source;
        else if (tok[1] == "target")
            rec.domain = Domain::target;
        else
            fail("dataset row " + std::to_string(row) + ": unknown domain '" + tok[1] + "'");
        long long label = detail::parse_int_field(tok[2], row, "label");
        if (label < 0) fail("dataset row " + std::to_string(row) + ": label must be >= 0");
        rec.true_label = static_cast<int>(label);
        rec.features.resize(dim);
        for (int j = 0; j < dim; ++j)
            rec.features[j] = detail::parse_double_field(tok[static_cast<std::size_t>(3 + j)], row, "feature");
        if (rec.features.norm() <= 0.0)
            fail("dataset row " + std::to_string(row) + ": zero-norm feature vector");
        ds.records.push_back(std::move(rec));
    }
    ds.finalize();
    return ds;
}

/// Writes the CSV format load_dataset reads. LF endings, full double precision.
inline void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("dataset: cannot write file '" + path + "'");
    out << "id,domain,label";
    for (int j = 0; j < ds.dim; ++j) out << ",f" << j;
    out << "\n";
    for (const FeatureRecord& r : ds.records) {
        out << r.id << ',' << to_string(r.domain) << ',' << r.true_label;
        for (int j = 0; j < ds.dim; ++j) out << ',' << format_double(r.features[j]);
        out << "\n";
    }
    if (!out) fail("dataset: write failure on '" + path + "'");
}

}  // namespace gpada
