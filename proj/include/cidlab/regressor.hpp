#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace cid {

// Two-output value regressor: row 0 is Q(Trade), row 1 is Q(Idle). Inputs
// are column samples (d x n). Each sample carries a target for the action
// that was taken only; `mask` marks which entries of `targets` count.
class Regressor {
public:
    virtual ~Regressor() = default;

    virtual void fit(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, const Eigen::MatrixXd& mask,
                     std::uint64_t seed) = 0;
    virtual Eigen::Vector2d predict(const Eigen::Ref<const Eigen::VectorXd>& z) const = 0;
    virtual Eigen::MatrixXd predict_batch(const Eigen::MatrixXd& inputs) const;

    virtual std::string kind() const = 0;
    virtual void save(std::ostream& os) const = 0;
    virtual void load(std::istream& is) = 0;
    virtual std::unique_ptr<Regressor> clone() const = 0;
};

using RegressorFactory = std::function<std::unique_ptr<Regressor>()>;

struct MlpConfig {
    int hidden = 64;
    int layers = 2;
    double learning_rate = 1e-3;  // Adam step
    int epochs = 200;
    int batch = 64;
    int patience = 10;            // epochs without validation improvement
    double validation = 0.1;      // held-out share when n >= 20
};

// Fully connected ReLU network with standardized targets, trained by Adam
// on the masked squared loss. An unfitted network predicts zero.
class MlpRegressor final : public Regressor {
public:
    explicit MlpRegressor(MlpConfig config = {}) : cfg_(config) {}

    void fit(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, const Eigen::MatrixXd& mask,
             std::uint64_t seed) override;
    Eigen::Vector2d predict(const Eigen::Ref<const Eigen::VectorXd>& z) const override;
    Eigen::MatrixXd predict_batch(const Eigen::MatrixXd& inputs) const override;

    std::string kind() const override { return "mlp"; }
    void save(std::ostream& os) const override;
    void load(std::istream& is) override;
    std::unique_ptr<Regressor> clone() const override { return std::make_unique<MlpRegressor>(*this); }

    const MlpConfig& config() const { return cfg_; }
    int epochs_run() const { return epochs_run_; }
    bool fitted() const { return !w_.empty(); }

private:
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;  // standardized outputs

    MlpConfig cfg_;
    std::vector<Eigen::MatrixXd> w_;
    std::vector<Eigen::VectorXd> b_;
    Eigen::Vector2d y_mean_ = Eigen::Vector2d::Zero();
    Eigen::Vector2d y_scale_ = Eigen::Vector2d::Ones();
    int epochs_run_ = 0;
};

// Lookup table keyed on the exact input vector; each cell holds the mean
// target per action. Unseen inputs and actions predict zero.
class TabularRegressor final : public Regressor {
public:
    void fit(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, const Eigen::MatrixXd& mask,
             std::uint64_t seed) override;
    Eigen::Vector2d predict(const Eigen::Ref<const Eigen::VectorXd>& z) const override;

    std::string kind() const override { return "tabular"; }
    void save(std::ostream& os) const override;
    void load(std::istream& is) override;
    std::unique_ptr<Regressor> clone() const override { return std::make_unique<TabularRegressor>(*this); }

    std::size_t cells() const { return table_.size(); }

private:
    std::map<std::vector<double>, Eigen::Vector2d> table_;
};

// "mlp" or "tabular"; throws ValidationError otherwise.
RegressorFactory regressor_factory(const std::string& kind, const MlpConfig& mlp = {});

// Shortest round-trip text form for doubles, shared by the checkpoint code.
std::string format_double(double x);
double parse_double(const std::string& token);

}  // namespace cid
