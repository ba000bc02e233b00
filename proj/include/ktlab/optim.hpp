#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ktlab/tensor.hpp"

namespace ktlab {

// One learnable array: value, gradient accumulator, and Adam moments, all of
// the same shape.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor moment1;
    Tensor moment2;

    Parameter(std::string n, std::vector<size_t> shape)
        : name(std::move(n)), value(shape), grad(shape), moment1(shape), moment2(std::move(shape)) {}

    void zero_grad() { grad.fill(0.0); }
};

class ParamSet {
public:
    Parameter& add(std::string name, std::vector<size_t> shape) {
        params_.emplace_back(std::move(name), std::move(shape));
        return params_.back();
    }

    std::vector<Parameter>& items() { return params_; }
    const std::vector<Parameter>& items() const { return params_; }
    size_t count() const { return params_.size(); }

    Parameter* find(const std::string& name);
    const Parameter* find(const std::string& name) const;

    void zero_grads() {
        for (auto& p : params_) {
            p.zero_grad();
        }
    }

    size_t total_size() const {
        size_t n = 0;
        for (const auto& p : params_) {
            n += p.value.size();
        }
        return n;
    }

private:
    std::vector<Parameter> params_;
};

struct AdamConfig {
    double learning_rate = 0.001;
    double decay_rate = 0.3;
    int decay_every_epochs = 8;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step = 0; // optimizer steps taken so far
    int epoch = 0; // set by the training loop
    // Alternate reading of the decay schedule: staircase over optimizer steps
    // instead of epochs.
    bool decay_per_step = false;

    double effective_learning_rate() const;
    void validate() const;
};

// Standard Adam update with bias correction at the staircase-decayed rate.
// Throws NumericError naming the parameter on a non-finite gradient.
void adam_step(ParamSet& params, AdamConfig& cfg);

} // namespace ktlab
