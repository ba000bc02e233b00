#include "ktlab/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "ktlab/errors.hpp"
#include "ktlab/rng.hpp"

namespace ktlab {

size_t Dataset::record_count() const {
    size_t n = 0;
    for (const auto& s : sequences) {
        n += s.steps.size();
    }
    return n;
}

namespace {

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    return line;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    size_t start = 0;
    for (;;) {
        const size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

constexpr const char* kCsvHeader = "student_id,skill_id,correct";

struct RawRecord {
    std::string student;
    std::string skill;
    int correct;
};

// Shared vocabulary/sequence assembly so parsed and synthetic datasets get
// identical first-seen indexing.
Dataset build_dataset(const std::vector<RawRecord>& records) {
    Dataset ds;
    std::unordered_map<std::string, int> vocab;
    std::unordered_map<std::string, size_t> student_pos;
    for (const auto& r : records) {
        auto [vit, vnew] = vocab.try_emplace(r.skill, ds.skill_count());
        if (vnew) {
            ds.skill_vocabulary.push_back(r.skill);
        }
        auto [sit, snew] = student_pos.try_emplace(r.student, ds.sequences.size());
        if (snew) {
            ds.sequences.push_back(StudentSequence{r.student, {}});
        }
        ds.sequences[sit->second].steps.push_back(InteractionStep{vit->second, r.correct});
    }
    return ds;
}

} // namespace

Dataset parse_interaction_log(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("parse: empty input, expected header '" + std::string(kCsvHeader) + "'");
    }
    if (strip_cr(line) != kCsvHeader) {
        throw DataError("parse: line 1: bad header, expected '" + std::string(kCsvHeader) + "'");
    }

    std::vector<RawRecord> records;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 3) {
            throw DataError("parse: line " + std::to_string(line_no) + ": expected 3 fields, got " +
                            std::to_string(fields.size()));
        }
        if (fields[0].empty() || fields[1].empty()) {
            throw DataError("parse: line " + std::to_string(line_no) + ": empty identifier field");
        }
        int correct;
        if (fields[2] == "0") {
            correct = 0;
        } else if (fields[2] == "1") {
            correct = 1;
        } else {
            throw DataError("parse: line " + std::to_string(line_no) +
                            ": correct must be 0 or 1, got '" + fields[2] + "'");
        }
        records.push_back(RawRecord{fields[0], fields[1], correct});
    }
    if (records.empty()) {
        throw DataError("parse: no interaction rows found");
    }
    return build_dataset(records);
}

Dataset parse_interaction_log_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    return parse_interaction_log(in);
}

void write_csv(const Dataset& ds, std::ostream& out) {
    out << kCsvHeader << '\n';
    for (const auto& seq : ds.sequences) {
        for (const auto& step : seq.steps) {
            out << seq.student_id << ',' << ds.skill_vocabulary[static_cast<size_t>(step.skill_index)]
                << ',' << step.correct << '\n';
        }
    }
}

std::string to_csv(const Dataset& ds) {
    std::ostringstream out;
    write_csv(ds, out);
    return out.str();
}

void write_manifest(const Dataset& ds, uint64_t csv_checksum, std::ostream& out) {
    out << "ktlab-dataset-manifest v1\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(csv_checksum));
    out << "source_checksum=fnv1a64:" << buf << '\n';
    out << "skill_count=" << ds.skill_count() << '\n';
    for (const auto& raw : ds.skill_vocabulary) {
        out << "skill=" << raw << '\n';
    }
}

std::string manifest_path_for(const std::string& csv_path) {
    std::filesystem::path p(csv_path);
    p.replace_extension(".manifest");
    return p.string();
}

void write_dataset(const Dataset& ds, const std::string& path) {
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw IoError("cannot open '" + path + "' for writing");
        }
        write_csv(ds, out);
    }
    const uint64_t checksum = file_checksum(path);
    std::ofstream mf(manifest_path_for(path), std::ios::binary);
    if (!mf) {
        throw IoError("cannot open '" + manifest_path_for(path) + "' for writing");
    }
    write_manifest(ds, checksum, mf);
}

namespace {

struct Manifest {
    uint64_t checksum = 0;
    std::vector<std::string> vocabulary;
};

Manifest read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    std::string line;
    if (!std::getline(in, line) || strip_cr(line) != "ktlab-dataset-manifest v1") {
        throw DataError("manifest '" + path + "': bad or missing header");
    }
    Manifest m;
    size_t declared_count = 0;
    bool have_count = false;
    while (std::getline(in, line)) {
        line = strip_cr(line);
        if (line.empty()) {
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError("manifest '" + path + "': malformed line '" + line + "'");
        }
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "source_checksum") {
            if (value.rfind("fnv1a64:", 0) != 0) {
                throw DataError("manifest '" + path + "': unknown checksum scheme");
            }
            m.checksum = std::stoull(value.substr(8), nullptr, 16);
        } else if (key == "skill_count") {
            declared_count = std::stoul(value);
            have_count = true;
        } else if (key == "skill") {
            m.vocabulary.push_back(value);
        } else {
            throw DataError("manifest '" + path + "': unknown key '" + key + "'");
        }
    }
    if (have_count && declared_count != m.vocabulary.size()) {
        throw DataError("manifest '" + path + "': skill_count does not match vocabulary");
    }
    return m;
}

} // namespace

Dataset read_dataset(const std::string& path) {
    Dataset ds = parse_interaction_log_file(path);
    const std::string mpath = manifest_path_for(path);
    if (!std::filesystem::exists(mpath)) {
        return ds;
    }
    const Manifest m = read_manifest(mpath);
    if (m.checksum != file_checksum(path)) {
        throw DataError("dataset '" + path + "': checksum does not match manifest");
    }
    // Re-map the file's first-seen indices onto the manifest vocabulary.
    std::unordered_map<std::string, int> target;
    for (size_t i = 0; i < m.vocabulary.size(); ++i) {
        target.emplace(m.vocabulary[i], static_cast<int>(i));
    }
    std::vector<int> remap(ds.skill_vocabulary.size());
    for (size_t i = 0; i < ds.skill_vocabulary.size(); ++i) {
        auto it = target.find(ds.skill_vocabulary[i]);
        if (it == target.end()) {
            throw DataError("dataset '" + path + "': skill '" + ds.skill_vocabulary[i] +
                            "' not present in manifest");
        }
        remap[i] = it->second;
    }
    for (auto& seq : ds.sequences) {
        for (auto& step : seq.steps) {
            step.skill_index = remap[static_cast<size_t>(step.skill_index)];
        }
    }
    ds.skill_vocabulary = m.vocabulary;
    return ds;
}

Dataset filter_short_sequences(const Dataset& ds) {
    Dataset out;
    out.skill_vocabulary = ds.skill_vocabulary;
    for (const auto& seq : ds.sequences) {
        if (seq.length() > 2) {
            out.sequences.push_back(seq);
        }
    }
    return out;
}

std::tuple<Dataset, Dataset, Dataset> split_by_student(const Dataset& ds,
                                                       std::array<double, 3> ratios,
                                                       uint64_t seed) {
    const double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("split: ratios must sum to 1");
    }
    const size_t n = ds.sequences.size();
    if (n < 3) {
        throw DataError("split: need at least 3 students, have " + std::to_string(n));
    }

    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    Rng rng(substream(seed, "split"));
    rng.shuffle(order);

    const size_t n_train = static_cast<size_t>(std::floor(ratios[0] * static_cast<double>(n)));
    const size_t n_val = static_cast<size_t>(std::floor(ratios[1] * static_cast<double>(n)));

    auto take = [&](size_t begin, size_t end) {
        Dataset part;
        part.skill_vocabulary = ds.skill_vocabulary;
        for (size_t i = begin; i < end; ++i) {
            part.sequences.push_back(ds.sequences[order[i]]);
        }
        return part;
    };
    return {take(0, n_train), take(n_train, n_train + n_val), take(n_train + n_val, n)};
}

std::vector<WindowRow> flatten_windows(const Dataset& ds, size_t k) {
    if (k < 2) {
        throw ConfigError("window: k must be >= 2");
    }
    std::vector<WindowRow> rows;
    for (const auto& seq : ds.sequences) {
        for (size_t start = 0; start < seq.steps.size(); start += k) {
            const size_t len = std::min(k, seq.steps.size() - start);
            WindowRow row;
            row.window = k;
            row.length = len;
            row.skills.assign(k, 0);
            row.correct.assign(k, 0);
            for (size_t t = 0; t < len; ++t) {
                row.skills[t] = seq.steps[start + t].skill_index;
                row.correct[t] = seq.steps[start + t].correct;
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<PaddedBatch> window_sequences(const Dataset& ds, size_t k, size_t batch) {
    if (batch < 1) {
        throw ConfigError("window: batch must be >= 1");
    }
    const std::vector<WindowRow> rows = flatten_windows(ds, k);
    std::vector<PaddedBatch> batches;
    for (size_t begin = 0; begin < rows.size(); begin += batch) {
        const size_t rows_here = std::min(batch, rows.size() - begin);
        PaddedBatch pb;
        pb.batch = rows_here;
        pb.window = k;
        pb.skills.assign(rows_here * k, 0);
        pb.correct.assign(rows_here * k, 0);
        pb.valid.assign(rows_here * k, 0);
        pb.lengths.assign(rows_here, 0);
        for (size_t r = 0; r < rows_here; ++r) {
            const WindowRow& row = rows[begin + r];
            pb.lengths[r] = static_cast<int>(row.length);
            for (size_t t = 0; t < k; ++t) {
                pb.skills[r * k + t] = row.skills[t];
                pb.correct[r * k + t] = row.correct[t];
                pb.valid[r * k + t] = t < row.length ? 1 : 0;
            }
        }
        batches.push_back(std::move(pb));
    }
    return batches;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.students < 1 || spec.skills < 1 || spec.length < 1) {
        throw ConfigError("synthetic: students, skills, and length must be positive");
    }
    Rng rng(substream(spec.seed, "synth"));

    std::vector<double> difficulty(static_cast<size_t>(spec.skills));
    for (auto& d : difficulty) {
        d = rng.normal(spec.difficulty_mean, spec.difficulty_std);
    }

    std::vector<RawRecord> records;
    records.reserve(static_cast<size_t>(spec.students) * static_cast<size_t>(spec.length));
    for (int s = 0; s < spec.students; ++s) {
        double ability = rng.normal(spec.ability_mean, spec.ability_std);
        // ability only grows with practice; a negative draw is clamped out
        const double gain = std::max(0.0, rng.normal(spec.learn_gain_mean, spec.learn_gain_std));
        const std::string student = "s" + std::to_string(s);
        for (int t = 0; t < spec.length; ++t) {
            const auto skill = static_cast<size_t>(rng.below(static_cast<uint64_t>(spec.skills)));
            const double p = 1.0 / (1.0 + std::exp(-(ability - difficulty[skill])));
            const int correct = rng.uniform01() < p ? 1 : 0;
            records.push_back(RawRecord{student, std::to_string(skill), correct});
            ability += gain;
        }
    }
    return build_dataset(records);
}

Dataset generate_synthetic(int students, int skills, int length, uint64_t seed) {
    SyntheticSpec spec;
    spec.students = students;
    spec.skills = skills;
    spec.length = length;
    spec.seed = seed;
    return generate_synthetic(spec);
}

uint64_t file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    return fnv1a64(bytes.data(), bytes.size());
}

} // namespace ktlab
