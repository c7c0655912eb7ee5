#include "hgpop/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hgpop/config.hpp"
#include "hgpop/error.hpp"

namespace hgpop {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "' for reading");
    return in;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
    return out;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

Count parse_count(std::string_view field, const fs::path& path, std::size_t line_no) {
    field = trim(field);
    Count value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": non-integer value '" +
                              std::string(field) + "'");
    }
    if (value < 0) {
        throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": negative count " +
                              std::to_string(value));
    }
    return value;
}

bool looks_numeric(std::string_view s) {
    s = trim(s);
    return !s.empty() && (std::isdigit(static_cast<unsigned char>(s.front())) || s.front() == '-' || s.front() == '+');
}

}  // namespace

CountFormat parse_count_format(std::string_view name) {
    if (name == "dense-csv") return CountFormat::dense_csv;
    if (name == "sparse-triplet") return CountFormat::sparse_triplet;
    throw ValidationError("unknown format '" + std::string(name) + "' (expected dense-csv or sparse-triplet)");
}

std::string count_format_name(CountFormat format) {
    return format == CountFormat::dense_csv ? "dense-csv" : "sparse-triplet";
}

void write_dense_csv(const fs::path& path, const CountMatrix& counts) {
    auto out = open_out(path);
    for (std::size_t c = 0; c < counts.cols(); ++c) out << (c ? "," : "") << "cat_" << c;
    out << '\n';
    for (std::size_t r = 0; r < counts.rows(); ++r) {
        auto row = counts.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
        out << '\n';
    }
}

CountMatrix read_dense_csv(const fs::path& path) {
    auto in = open_in(path);
    std::string line;
    std::size_t line_no = 0;
    CountMatrix m;
    std::vector<Count> values;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty()) continue;
        const auto fields = split(view, ',');
        if (first) {
            first = false;
            if (!looks_numeric(fields.front())) {
                m = CountMatrix(0, fields.size());
                continue;
            }
        }
        values.clear();
        for (auto f : fields) values.push_back(parse_count(f, path, line_no));
        if (m.rows() > 0 || m.cols() > 0) {
            if (values.size() != m.cols()) {
                throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                      std::to_string(m.cols()) + " columns, found " + std::to_string(values.size()));
            }
        }
        m.append_row(values);
    }
    return m;
}

void write_sparse_triplets(const fs::path& path, const CountMatrix& counts) {
    auto out = open_out(path);
    out << "# shape," << counts.rows() << ',' << counts.cols() << '\n';
    out << "row,col,count\n";
    for (std::size_t r = 0; r < counts.rows(); ++r) {
        auto row = counts.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (row[c] != 0) out << r << ',' << c << ',' << row[c] << '\n';
        }
    }
}

CountMatrix read_sparse_triplets(const fs::path& path) {
    auto in = open_in(path);
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::pair<std::size_t, std::size_t>> shape;
    std::map<std::pair<std::size_t, std::size_t>, Count> entries;
    std::size_t max_row = 0, max_col = 0;
    bool any = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = trim(line);
        if (view.empty()) continue;
        if (view.front() == '#') {
            view.remove_prefix(1);
            const auto fields = split(trim(view), ',');
            if (fields.size() == 3 && trim(fields[0]) == "shape") {
                shape = {static_cast<std::size_t>(parse_count(fields[1], path, line_no)),
                         static_cast<std::size_t>(parse_count(fields[2], path, line_no))};
            }
            continue;
        }
        const auto fields = split(view, ',');
        if (!looks_numeric(fields.front())) continue;  // header
        if (fields.size() != 3) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected row,col,count");
        }
        const auto r = static_cast<std::size_t>(parse_count(fields[0], path, line_no));
        const auto c = static_cast<std::size_t>(parse_count(fields[1], path, line_no));
        entries[{r, c}] += parse_count(fields[2], path, line_no);
        max_row = std::max(max_row, r);
        max_col = std::max(max_col, c);
        any = true;
    }
    const std::size_t rows = shape ? shape->first : (any ? max_row + 1 : 0);
    const std::size_t cols = shape ? shape->second : (any ? max_col + 1 : 0);
    if (any && (max_row >= rows || max_col >= cols)) {
        throw ValidationError(path.string() + ": entry outside the declared shape");
    }
    CountMatrix m(rows, cols);
    for (const auto& [rc, v] : entries) m(rc.first, rc.second) = v;
    return m;
}

void write_counts(const fs::path& path, const CountMatrix& counts, CountFormat format) {
    if (format == CountFormat::dense_csv) {
        write_dense_csv(path, counts);
    } else {
        write_sparse_triplets(path, counts);
    }
}

CountMatrix read_counts(const fs::path& path, CountFormat format) {
    return format == CountFormat::dense_csv ? read_dense_csv(path) : read_sparse_triplets(path);
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
    json j;
    j["format"] = "hgpop-dataset";
    j["version"] = 1;
    j["num_rows"] = manifest.num_rows;
    j["num_categories"] = manifest.num_categories;
    if (manifest.simulation) {
        j["seed"] = manifest.simulation->seed;
        j["config"] = *manifest.simulation;
    }
    j["labels"] = manifest.labels;
    j["ground_truth"] = manifest.ground_truth;
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

DatasetManifest read_manifest(const fs::path& path) {
    auto in = open_in(path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": invalid JSON: " + e.what());
    }
    if (j.value("format", "") != "hgpop-dataset") {
        throw ValidationError(path.string() + ": not a dataset manifest");
    }
    DatasetManifest m;
    try {
        m.num_rows = j.at("num_rows").get<std::size_t>();
        m.num_categories = j.at("num_categories").get<std::size_t>();
        if (j.contains("labels")) m.labels = j.at("labels").get<std::vector<int>>();
        if (j.contains("ground_truth")) m.ground_truth = j.at("ground_truth").get<std::vector<std::vector<Count>>>();
        if (j.contains("config")) m.simulation = j.at("config").get<SimulationConfig>();
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return m;
}

void check_manifest(const DatasetManifest& manifest, const CountMatrix& counts) {
    if (manifest.num_rows != counts.rows() || manifest.num_categories != counts.cols()) {
        throw ValidationError("manifest shape " + std::to_string(manifest.num_rows) + "x" +
                              std::to_string(manifest.num_categories) + " does not match counts " +
                              std::to_string(counts.rows()) + "x" + std::to_string(counts.cols()));
    }
    if (!manifest.labels.empty() && manifest.labels.size() != counts.rows()) {
        throw ValidationError("manifest has " + std::to_string(manifest.labels.size()) + " labels for " +
                              std::to_string(counts.rows()) + " rows");
    }
    for (const auto& gt : manifest.ground_truth) {
        if (gt.size() != counts.cols()) throw ValidationError("manifest ground truth has wrong number of categories");
    }
    for (int label : manifest.labels) {
        if (!manifest.ground_truth.empty() &&
            (label < 0 || static_cast<std::size_t>(label) >= manifest.ground_truth.size())) {
            throw ValidationError("manifest label " + std::to_string(label) + " has no ground truth");
        }
    }
}

DatasetManifest manifest_for(const SimulatedDataset& ds, const SimulationConfig& config) {
    return {ds.counts.rows(), ds.counts.cols(), ds.labels, ds.ground_truth, config};
}

void save_checkpoint(const fs::path& path, const NetworkParams& params) {
    json j;
    j["format"] = "hgpop-checkpoint";
    j["version"] = kCheckpointVersion;
    j["network"] = params.spec();
    j["num_categories"] = params.num_categories();
    json layers = json::array();
    const std::size_t n_enc = params.num_encoder_layers();
    for (std::size_t l = 0; l < params.layers().size(); ++l) {
        const auto& s = params.layers()[l];
        const auto vals = params.values().subspan(s.offset, std::size_t(s.out) * s.in + s.out);
        json layer;
        layer["name"] = (l < n_enc ? "encoder." + std::to_string(l) : "decoder." + std::to_string(l - n_enc));
        layer["in"] = s.in;
        layer["out"] = s.out;
        layer["weights"] = std::vector<double>(vals.begin(), vals.begin() + std::size_t(s.out) * s.in);
        layer["bias"] = std::vector<double>(vals.begin() + std::size_t(s.out) * s.in, vals.end());
        layers.push_back(std::move(layer));
    }
    j["layers"] = std::move(layers);
    auto out = open_out(path);
    out << j.dump() << '\n';
}

NetworkParams load_checkpoint(const fs::path& path) {
    auto in = open_in(path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": invalid JSON: " + e.what());
    }
    if (j.value("format", "") != "hgpop-checkpoint") throw ValidationError(path.string() + ": not a checkpoint");
    if (j.value("version", 0) != kCheckpointVersion) {
        throw ValidationError(path.string() + ": unsupported checkpoint version");
    }
    NetworkParams params(j.at("network").get<NetworkSpec>(), j.at("num_categories").get<int>());
    const auto& layers = j.at("layers");
    if (layers.size() != params.layers().size()) throw ValidationError(path.string() + ": layer count mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& s = params.layers()[l];
        const auto w = layers[l].at("weights").get<std::vector<double>>();
        const auto b = layers[l].at("bias").get<std::vector<double>>();
        if (layers[l].at("in").get<int>() != s.in || layers[l].at("out").get<int>() != s.out ||
            w.size() != std::size_t(s.out) * s.in || b.size() != std::size_t(s.out)) {
            throw ValidationError(path.string() + ": layer " + std::to_string(l) + " has the wrong shape");
        }
        auto dst = params.values().subspan(s.offset);
        std::copy(w.begin(), w.end(), dst.begin());
        std::copy(b.begin(), b.end(), dst.begin() + w.size());
    }
    return params;
}

}  // namespace hgpop
