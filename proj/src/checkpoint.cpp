#include "ktlab/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ktlab/errors.hpp"

namespace ktlab {

namespace {

constexpr char kMagic[8] = {'K', 'T', 'S', 'T', 'D', 'R', 'L', '\0'};

static_assert(sizeof(double) == 8, "checkpoint format requires 64-bit reals");

template <class T>
void write_le(std::ostream& out, T value) {
    static_assert(std::is_unsigned_v<T>);
    unsigned char bytes[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) {
        bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T read_le(std::istream& in) {
    unsigned char bytes[sizeof(T)];
    in.read(reinterpret_cast<char*>(bytes), sizeof(T));
    T value = 0;
    for (size_t i = 0; i < sizeof(T); ++i) {
        value |= static_cast<T>(bytes[i]) << (8 * i);
    }
    return value;
}

void write_f64_le(std::ostream& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    write_le<uint64_t>(out, bits);
}

double read_f64_le(std::istream& in) {
    const uint64_t bits = read_le<uint64_t>(in);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string shape_string(const Tensor& t) {
    std::string s;
    for (size_t i = 0; i < t.rank(); ++i) {
        if (i > 0) {
            s += 'x';
        }
        s += std::to_string(t.dim(i));
    }
    return s;
}

std::string channels_string(const std::vector<int>& channels) {
    std::string s;
    for (size_t i = 0; i < channels.size(); ++i) {
        if (i > 0) {
            s += ',';
        }
        s += std::to_string(channels[i]);
    }
    return s;
}

std::string build_manifest(const Model& model) {
    const Hyperparameters& hp = model.hp();
    std::ostringstream out;
    out << "variant=" << to_string(model.variant()) << '\n';
    out << "skill_count=" << model.skill_count() << '\n';
    out << "learning_rate=" << fmt_double(hp.learning_rate) << '\n';
    out << "decay_rate=" << fmt_double(hp.decay_rate) << '\n';
    out << "decay_every_epochs=" << hp.decay_every_epochs << '\n';
    out << "batch_size=" << hp.batch_size << '\n';
    out << "epochs=" << hp.epochs << '\n';
    out << "conv_channels=" << channels_string(hp.conv_channels) << '\n';
    out << "conv_layers=" << hp.conv_layers << '\n';
    out << "conv_keep_prob=" << fmt_double(hp.conv_keep_prob) << '\n';
    out << "lstm_units=" << hp.lstm_units << '\n';
    out << "lstm_output_keep_prob=" << fmt_double(hp.lstm_output_keep_prob) << '\n';
    out << "embedding_width=" << hp.embedding_width << '\n';
    out << "max_seq_len=" << hp.max_seq_len << '\n';
    out << "kernel_width=" << hp.kernel_width << '\n';
    out << "seed=" << hp.seed << '\n';
    out << "decay_per_step=" << (hp.decay_per_step ? 1 : 0) << '\n';
    out << "complement_keep_probs=" << (hp.complement_keep_probs ? 1 : 0) << '\n';
    out << "trainable_embedding=" << (hp.trainable_embedding ? 1 : 0) << '\n';
    out << "strict_causal_eval=" << (hp.strict_causal_eval ? 1 : 0) << '\n';
    for (const auto& p : model.params().items()) {
        out << "param=" << p.name << ':' << shape_string(p.value) << '\n';
    }
    return out.str();
}

std::vector<int> parse_channels(const std::string& s) {
    std::vector<int> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        out.push_back(std::stoi(item));
    }
    return out;
}

} // namespace

void save_checkpoint(const Model& model, const std::string& path) {
    for (const auto& p : model.params().items()) {
        if (!p.value.all_finite()) {
            throw NumericError("checkpoint: non-finite values in parameter '" + p.name + "'");
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out.write(kMagic, sizeof kMagic);
    write_le<uint32_t>(out, kCheckpointVersion);
    const std::string manifest = build_manifest(model);
    write_le<uint64_t>(out, manifest.size());
    out.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
    for (const auto& p : model.params().items()) {
        for (size_t i = 0; i < p.value.size(); ++i) {
            write_f64_le(out, p.value[i]);
        }
    }
    if (!out) {
        throw IoError("failed writing checkpoint '" + path + "'");
    }
}

Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw DataError("checkpoint '" + path + "': bad magic header");
    }
    const auto version = read_le<uint32_t>(in);
    if (!in || version != kCheckpointVersion) {
        throw DataError("checkpoint '" + path + "': unsupported version " + std::to_string(version));
    }
    const auto manifest_len = read_le<uint64_t>(in);
    std::string manifest(manifest_len, '\0');
    in.read(manifest.data(), static_cast<std::streamsize>(manifest_len));
    if (!in) {
        throw DataError("checkpoint '" + path + "': truncated manifest");
    }

    Hyperparameters hp;
    std::string variant_id;
    int skill_count = 0;
    std::vector<std::pair<std::string, std::string>> declared_params;

    std::istringstream mf(manifest);
    std::string line;
    while (std::getline(mf, line)) {
        if (line.empty()) {
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError("checkpoint '" + path + "': malformed manifest line '" + line + "'");
        }
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "variant") {
            variant_id = value;
        } else if (key == "skill_count") {
            skill_count = std::stoi(value);
        } else if (key == "learning_rate") {
            hp.learning_rate = std::stod(value);
        } else if (key == "decay_rate") {
            hp.decay_rate = std::stod(value);
        } else if (key == "decay_every_epochs") {
            hp.decay_every_epochs = std::stoi(value);
        } else if (key == "batch_size") {
            hp.batch_size = std::stoi(value);
        } else if (key == "epochs") {
            hp.epochs = std::stoi(value);
        } else if (key == "conv_channels") {
            hp.conv_channels = parse_channels(value);
        } else if (key == "conv_layers") {
            hp.conv_layers = std::stoi(value);
        } else if (key == "conv_keep_prob") {
            hp.conv_keep_prob = std::stod(value);
        } else if (key == "lstm_units") {
            hp.lstm_units = std::stoi(value);
        } else if (key == "lstm_output_keep_prob") {
            hp.lstm_output_keep_prob = std::stod(value);
        } else if (key == "embedding_width") {
            hp.embedding_width = std::stoi(value);
        } else if (key == "max_seq_len") {
            hp.max_seq_len = std::stoi(value);
        } else if (key == "kernel_width") {
            hp.kernel_width = std::stoi(value);
        } else if (key == "seed") {
            hp.seed = std::stoull(value);
        } else if (key == "decay_per_step") {
            hp.decay_per_step = value == "1";
        } else if (key == "complement_keep_probs") {
            hp.complement_keep_probs = value == "1";
        } else if (key == "trainable_embedding") {
            hp.trainable_embedding = value == "1";
        } else if (key == "strict_causal_eval") {
            hp.strict_causal_eval = value == "1";
        } else if (key == "param") {
            const size_t colon = value.find(':');
            if (colon == std::string::npos) {
                throw DataError("checkpoint '" + path + "': malformed param line '" + line + "'");
            }
            declared_params.emplace_back(value.substr(0, colon), value.substr(colon + 1));
        } else {
            throw DataError("checkpoint '" + path + "': unknown manifest key '" + key + "'");
        }
    }

    Model model(parse_variant(variant_id), hp, skill_count);
    const auto& items = model.params().items();
    if (declared_params.size() != items.size()) {
        throw DataError("checkpoint '" + path + "': parameter list does not match the variant");
    }
    for (size_t i = 0; i < items.size(); ++i) {
        if (declared_params[i].first != items[i].name ||
            declared_params[i].second != shape_string(items[i].value)) {
            throw DataError("checkpoint '" + path + "': shape mismatch for parameter '" +
                            declared_params[i].first + "'");
        }
    }
    for (auto& p : model.params().items()) {
        for (size_t i = 0; i < p.value.size(); ++i) {
            p.value[i] = read_f64_le(in);
        }
        if (!in) {
            throw DataError("checkpoint '" + path + "': truncated parameter data");
        }
    }
    return model;
}

} // namespace ktlab
