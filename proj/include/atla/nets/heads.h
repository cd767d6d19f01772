#ifndef ATLA_NETS_HEADS_H_
#define ATLA_NETS_HEADS_H_

#include <Eigen/Core>

#include "atla/common/rng.h"

namespace atla::nets {

// Categorical distribution over logits z.
namespace categorical {

Eigen::VectorXd LogSoftmax(const Eigen::VectorXd& logits);
Eigen::VectorXd Softmax(const Eigen::VectorXd& logits);
double LogProb(const Eigen::VectorXd& logits, int action);
double Entropy(const Eigen::VectorXd& logits);
// KL(softmax(p) || softmax(q)).
double Kl(const Eigen::VectorXd& p_logits, const Eigen::VectorXd& q_logits);

Eigen::VectorXd LogProbGrad(const Eigen::VectorXd& logits, int action);
Eigen::VectorXd EntropyGrad(const Eigen::VectorXd& logits);
Eigen::VectorXd KlGradP(const Eigen::VectorXd& p_logits, const Eigen::VectorXd& q_logits);
Eigen::VectorXd KlGradQ(const Eigen::VectorXd& p_logits, const Eigen::VectorXd& q_logits);

int Sample(const Eigen::VectorXd& logits, Rng& rng);
int Mode(const Eigen::VectorXd& logits);  // lowest index on ties

}  // namespace categorical

// Diagonal Gaussian with mean mu and log standard deviation log_std.
namespace gaussian {

inline constexpr double kMinLogStd = -10.0;
inline constexpr double kMaxLogStd = 2.0;

double LogProb(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
               const Eigen::VectorXd& action);
double Entropy(const Eigen::VectorXd& log_std);
// KL(N(mp, sp) || N(mq, sq)).
double Kl(const Eigen::VectorXd& p_mean, const Eigen::VectorXd& p_log_std,
          const Eigen::VectorXd& q_mean, const Eigen::VectorXd& q_log_std);

// Gradients of LogProb wrt mean and log_std.
void LogProbGrad(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                 const Eigen::VectorXd& action, Eigen::VectorXd* d_mean,
                 Eigen::VectorXd* d_log_std);
// Gradients of Kl wrt every argument (any pointer may be null).
void KlGrad(const Eigen::VectorXd& p_mean, const Eigen::VectorXd& p_log_std,
            const Eigen::VectorXd& q_mean, const Eigen::VectorXd& q_log_std,
            Eigen::VectorXd* d_p_mean, Eigen::VectorXd* d_p_log_std,
            Eigen::VectorXd* d_q_mean, Eigen::VectorXd* d_q_log_std);

Eigen::VectorXd Sample(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                       Rng& rng);

}  // namespace gaussian

}  // namespace atla::nets

#endif  // ATLA_NETS_HEADS_H_
