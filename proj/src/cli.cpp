#include "ktlab/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "ktlab/checkpoint.hpp"
#include "ktlab/dataio.hpp"
#include "ktlab/errors.hpp"
#include "ktlab/metrics.hpp"
#include "ktlab/model.hpp"
#include "ktlab/modelcheck.hpp"
#include "ktlab/trainer.hpp"

namespace ktlab::cli {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
    std::vector<int> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw ConfigError(what + ": bad integer '" + item + "'");
        }
    }
    if (out.empty()) {
        throw ConfigError(what + ": empty list");
    }
    return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "1" || v == "true") {
        return true;
    }
    if (v == "0" || v == "false") {
        return false;
    }
    throw ConfigError("hp: " + key + " must be a boolean (0/1/true/false)");
}

// Overrides use `--hp key=value`; unknown keys are rejected. The seed is not
// an override: it comes from --seed so all randomness flows from one root.
void apply_hp_override(Hyperparameters& hp, const std::string& kv) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("hp: override must look like key=value, got '" + kv + "'");
    }
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    try {
        if (key == "learning_rate") {
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
            hp.conv_channels = parse_int_list(value, "hp: conv_channels");
            hp.conv_layers = static_cast<int>(hp.conv_channels.size());
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
        } else if (key == "decay_per_step") {
            hp.decay_per_step = parse_bool(value, key);
        } else if (key == "complement_keep_probs") {
            hp.complement_keep_probs = parse_bool(value, key);
        } else if (key == "trainable_embedding") {
            hp.trainable_embedding = parse_bool(value, key);
        } else if (key == "strict_causal_eval") {
            hp.strict_causal_eval = parse_bool(value, key);
        } else {
            throw ConfigError("hp: unknown key '" + key + "'");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("hp: bad value for '" + key + "': '" + value + "'");
    }
}

Hyperparameters hp_from_overrides(const std::vector<std::string>& overrides, uint64_t seed) {
    Hyperparameters hp;
    for (const auto& kv : overrides) {
        apply_hp_override(hp, kv);
    }
    hp.seed = seed;
    return hp;
}

void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << "epoch,learning_rate,train_loss,train_predictions,"
           "val_rmse,val_auc,val_acc,val_r2,val_predictions\n";
    for (const auto& rec : history) {
        out << rec.epoch << ',' << fmt_double(rec.learning_rate) << ','
            << fmt_double(rec.train_loss) << ',' << rec.train_predictions << ','
            << fmt_double(rec.validation.rmse) << ','
            << (rec.validation.auc ? fmt_double(*rec.validation.auc) : std::string("undefined"))
            << ',' << fmt_double(rec.validation.acc) << ',' << fmt_double(rec.validation.r2) << ','
            << rec.validation.predictions << '\n';
    }
}

Dataset read_for_training(const std::string& path) {
    const Dataset ds = read_dataset(path);
    if (ds.sequences.empty()) {
        throw DataError("dataset '" + path + "' has no students");
    }
    return ds;
}

int run_synth(int students, int skills, int len, uint64_t seed, const std::string& out) {
    SyntheticSpec spec;
    spec.students = students;
    spec.skills = skills;
    spec.length = len;
    spec.seed = seed;
    const Dataset ds = generate_synthetic(spec);
    write_dataset(ds, out);
    std::cerr << "synth: wrote " << ds.student_count() << " students, " << ds.skill_count()
              << " skills, " << ds.record_count() << " records to " << out << "\n";
    return 0;
}

int run_prepare(const std::string& in, const std::string& out) {
    const Dataset raw = read_dataset(in);
    const Dataset filtered = filter_short_sequences(raw);
    write_dataset(filtered, out);
    std::cerr << "prepare: kept " << filtered.student_count() << " of " << raw.student_count()
              << " students (" << filtered.record_count() << " records), M=" << filtered.skill_count()
              << "\n";
    return 0;
}

int run_gradcheck(uint64_t seed) {
    const FullModelCheck check = full_model_grad_check(seed);
    for (const auto& entry : check.report.per_param) {
        std::cout << "  " << entry.name << ": max relative error " << fmt_double(entry.max_rel_error)
                  << "\n";
    }
    std::cout << "gradcheck: " << check.parameters << " parameters, max relative error "
              << fmt_double(check.report.max_rel_error) << " (probe attempts " << check.attempts
              << ")\n";
    if (check.report.max_rel_error < 1e-4) {
        std::cout << "gradcheck: PASS (threshold 1e-4)\n";
        return 0;
    }
    std::cerr << "gradcheck: FAIL, max relative error " << fmt_double(check.report.max_rel_error)
              << " >= 1e-4\n";
    return 3;
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"ktlab: spatio-temporal knowledge-tracing laboratory"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic interaction log");
    int sy_students = 0, sy_skills = 0, sy_len = 0;
    uint64_t sy_seed = 1;
    std::string sy_out;
    synth->add_option("--students", sy_students, "Number of students")->required();
    synth->add_option("--skills", sy_skills, "Number of distinct skills")->required();
    synth->add_option("--len", sy_len, "Interactions per student")->required();
    synth->add_option("--seed", sy_seed, "Random seed");
    synth->add_option("--out", sy_out, "Output CSV path")->required();

    // prepare
    auto* prepare = app.add_subcommand("prepare", "Filter invalid students (length <= 2)");
    std::string pr_in, pr_out;
    prepare->add_option("--in", pr_in, "Input CSV")->required();
    prepare->add_option("--out", pr_out, "Output CSV")->required();

    // split
    auto* split = app.add_subcommand("split", "Split students into train/val/test");
    std::string sp_in, sp_out_dir, sp_ratios = "0.55,0.15,0.30";
    uint64_t sp_seed = 1;
    split->add_option("--in", sp_in, "Input CSV")->required();
    split->add_option("--seed", sp_seed, "Shuffle seed");
    split->add_option("--out-dir", sp_out_dir, "Output directory")->required();
    split->add_option("--ratios", sp_ratios, "Comma-separated train,val,test ratios");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a model variant");
    std::string tr_variant, tr_train, tr_val, tr_out;
    std::vector<std::string> tr_hp;
    uint64_t tr_seed = 1;
    int tr_threads = 1;
    train_cmd->add_option("--variant", tr_variant, "Model variant id")->required();
    train_cmd->add_option("--train", tr_train, "Training CSV")->required();
    train_cmd->add_option("--val", tr_val, "Validation CSV")->required();
    train_cmd->add_option("--out-model", tr_out, "Checkpoint output path")->required();
    train_cmd->add_option("--hp", tr_hp, "Hyperparameter override key=value (repeatable)");
    train_cmd->add_option("--seed", tr_seed, "Random seed");
    train_cmd->add_option("--threads", tr_threads, "Worker threads (fixed value => reproducible)");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a test set");
    std::string ev_model, ev_test, ev_report;
    int ev_threads = 1;
    bool ev_strict = false;
    eval_cmd->add_option("--model", ev_model, "Checkpoint path")->required();
    eval_cmd->add_option("--test", ev_test, "Test CSV")->required();
    eval_cmd->add_option("--report", ev_report, "Metrics report output path")->required();
    eval_cmd->add_option("--threads", ev_threads, "Worker threads");
    eval_cmd->add_flag("--strict-causal", ev_strict,
                       "Silence the backward direction at inference (leakage-free scoring)");

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "Full-model finite-difference gradient check");
    uint64_t gc_seed = 1;
    gc->add_option("--seed", gc_seed, "Probe seed");

    // compare
    auto* cmp = app.add_subcommand("compare", "Train and evaluate variants, averaged over seeds");
    std::string cp_variants = "all", cp_data_dir, cp_out;
    std::vector<std::string> cp_hp;
    int cp_seeds = 3, cp_threads = 1;
    uint64_t cp_seed = 1;
    cmp->add_option("--variants", cp_variants, "'all' or comma-separated variant ids");
    cmp->add_option("--data-dir", cp_data_dir, "Directory holding train/val/test CSVs")->required();
    cmp->add_option("--seeds", cp_seeds, "Seeds per variant");
    cmp->add_option("--seed", cp_seed, "Base seed");
    cmp->add_option("--out", cp_out, "Output comparison CSV")->required();
    cmp->add_option("--hp", cp_hp, "Hyperparameter override key=value (repeatable)");
    cmp->add_option("--threads", cp_threads, "Worker threads");

    std::vector<const char*> argv;
    argv.push_back("ktlab");
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());

        if (*synth) {
            return run_synth(sy_students, sy_skills, sy_len, sy_seed, sy_out);
        }

        if (*prepare) {
            return run_prepare(pr_in, pr_out);
        }

        if (*split) {
            std::array<double, 3> ratios{};
            {
                std::istringstream in(sp_ratios);
                std::string item;
                size_t i = 0;
                while (std::getline(in, item, ',')) {
                    if (i >= 3) {
                        throw ConfigError("split: expected exactly 3 ratios");
                    }
                    try {
                        ratios[i++] = std::stod(item);
                    } catch (const std::exception&) {
                        throw ConfigError("split: bad ratio '" + item + "'");
                    }
                }
                if (i != 3) {
                    throw ConfigError("split: expected exactly 3 ratios");
                }
            }
            const Dataset ds = read_for_training(sp_in);
            auto [train_ds, val_ds, test_ds] = split_by_student(ds, ratios, sp_seed);
            std::filesystem::create_directories(sp_out_dir);
            const std::filesystem::path dir(sp_out_dir);
            write_dataset(train_ds, (dir / "train.csv").string());
            write_dataset(val_ds, (dir / "val.csv").string());
            write_dataset(test_ds, (dir / "test.csv").string());
            std::cerr << "split: " << train_ds.student_count() << "/" << val_ds.student_count()
                      << "/" << test_ds.student_count() << " students to " << sp_out_dir << "\n";
            return 0;
        }

        if (*train_cmd) {
            const Variant variant = parse_variant(tr_variant);
            const Hyperparameters hp = hp_from_overrides(tr_hp, tr_seed);
            const Dataset train_ds = read_for_training(tr_train);
            const Dataset val_ds = read_for_training(tr_val);
            if (val_ds.skill_count() != train_ds.skill_count()) {
                throw DataError("train: validation skill count " +
                                std::to_string(val_ds.skill_count()) + " does not match training " +
                                std::to_string(train_ds.skill_count()) +
                                " (use the split manifests)");
            }
            TrainOptions options;
            options.threads = tr_threads;
            options.on_epoch = [](const EpochRecord& rec) {
                std::cerr << "epoch " << rec.epoch << ": lr " << rec.learning_rate << ", train loss "
                          << rec.train_loss << ", val auc "
                          << (rec.validation.auc ? std::to_string(*rec.validation.auc)
                                                 : std::string("undefined"))
                          << "\n";
            };
            const TrainResult result = train(variant, hp, train_ds, val_ds, options);
            save_checkpoint(result.model, tr_out);
            write_history_csv(result.history, tr_out + ".history.csv");
            std::cerr << "train: best epoch " << result.best_epoch << ", checkpoint " << tr_out
                      << "\n";
            return 0;
        }

        if (*eval_cmd) {
            Model model = load_checkpoint(ev_model);
            if (ev_strict) {
                Hyperparameters hp = model.hp();
                hp.strict_causal_eval = true;
                Model strict(model.variant(), hp, model.skill_count());
                strict.params() = model.params();
                model = std::move(strict);
            }
            const Dataset test_ds = read_for_training(ev_test);
            if (test_ds.skill_count() != model.skill_count()) {
                throw DataError("eval: checkpoint skill count " +
                                std::to_string(model.skill_count()) +
                                " does not match dataset skill count " +
                                std::to_string(test_ds.skill_count()));
            }
            const MetricsReport report = evaluate(model, test_ds, ev_threads);
            {
                std::ofstream out(ev_report, std::ios::binary);
                if (!out) {
                    throw IoError("cannot open '" + ev_report + "' for writing");
                }
                out << report.to_text();
            }
            std::cout << report.to_text();
            if (!report.auc) {
                std::cerr << "eval: AUC undefined (single-class targets)\n";
                return 2;
            }
            return 0;
        }

        if (*gc) {
            return run_gradcheck(gc_seed);
        }

        if (*cmp) {
            std::vector<Variant> variants;
            if (cp_variants == "all") {
                variants.assign(kAllVariants.begin(), kAllVariants.end());
            } else {
                std::istringstream in(cp_variants);
                std::string item;
                while (std::getline(in, item, ',')) {
                    variants.push_back(parse_variant(item));
                }
            }
            const Hyperparameters hp = hp_from_overrides(cp_hp, cp_seed);
            const std::filesystem::path dir(cp_data_dir);
            const Dataset train_ds = read_for_training((dir / "train.csv").string());
            const Dataset val_ds = read_for_training((dir / "val.csv").string());
            const Dataset test_ds = read_for_training((dir / "test.csv").string());
            TrainOptions options;
            options.threads = cp_threads;

            std::ofstream out(cp_out, std::ios::binary);
            if (!out) {
                throw IoError("cannot open '" + cp_out + "' for writing");
            }
            out << "variant,rmse,auc,acc,r2\n";
            for (Variant v : variants) {
                std::cerr << "compare: " << to_string(v) << " over " << cp_seeds << " seed(s)\n";
                const SeedAverage avg =
                    train_eval_seeds(v, hp, train_ds, val_ds, test_ds, cp_seeds, options);
                char line[256];
                std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%.6f,%.6f\n",
                              to_string(v).c_str(), avg.mean.rmse,
                              avg.mean.auc ? *avg.mean.auc : std::nan(""), avg.mean.acc,
                              avg.mean.r2);
                out << line;
                out.flush();
            }
            std::cerr << "compare: wrote " << cp_out << "\n";
            return 0;
        }

        throw ConfigError("no subcommand selected");
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const TrainingError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace ktlab::cli
