"""Train the classifier head with G-HHO on generated blob images.

Run: python3 demos/synthetic_training.py   (about 15 s)
"""

from ghho.data import synthetic_blobs
from ghho.optimizer import RunConfig
from ghho.pipeline import prepare
from ghho.trainer import Sample, split_dataset, train

# 200 noisy images; odd ones carry a bright ellipse and count as positives
items = synthetic_blobs(200, seed=0)
samples = []
for item in items:
    prep = prepare(item.image)
    samples.append(Sample(prep.masked, prep.features, item.label, item.name))

train_set, test_set = split_dataset(samples, seed=0)
print(len(train_set), "training and", len(test_set), "test images")

# 20 candidates for 100 iterations: 50 hawk iterations, then 50 wolf iterations
classifier, report = train(train_set, config=RunConfig(population=20, max_iterations=100, seed=0),
                           test_set=test_set)

for k in range(0, 100, 20):
    print(f"iter {k:>3}  train rmse {report.train_loss[k]:.4f}  test acc {report.test_acc[k]:.3f}")
print("confusion", report.confusion)
m = report.metrics
print(f"accuracy {m.accuracy:.3f} precision {m.precision:.3f} recall {m.recall:.3f} "
      f"f-measure {m.f_measure:.3f}")
