#!/usr/bin/env python3
"""Convert the UCI Adult census files into the CSV layout this toolkit reads.

Output columns: a_1,x_1,...,x_102 where a_1 is the sex attribute (1 = Female)
and the 102 features are 5 standardized continuous columns (age,
education-num, capital-gain, capital-loss, hours-per-week; fnlwgt is dropped)
plus one-hot encodings of the 8 remaining categorical columns over their
full documented category lists. Rows containing '?' are dropped, every
feature column is z-scored over the kept rows, and the income label is
discarded. Category lists are fixed, so the output dimension is always 102.

Usage: prepare_adult.py adult.data [adult.test ...] -o adult_d102.csv
"""

import argparse
import csv
import math
import sys

CONTINUOUS = {0: "age", 4: "education-num", 10: "capital-gain",
              11: "capital-loss", 12: "hours-per-week"}

CATEGORICAL = {
    1: ("workclass", ["Private", "Self-emp-not-inc", "Self-emp-inc",
                      "Federal-gov", "Local-gov", "State-gov", "Without-pay",
                      "Never-worked"]),
    3: ("education", ["Bachelors", "Some-college", "11th", "HS-grad",
                      "Prof-school", "Assoc-acdm", "Assoc-voc", "9th",
                      "7th-8th", "12th", "Masters", "1st-4th", "10th",
                      "Doctorate", "5th-6th", "Preschool"]),
    5: ("marital-status", ["Married-civ-spouse", "Divorced", "Never-married",
                           "Separated", "Widowed", "Married-spouse-absent",
                           "Married-AF-spouse"]),
    6: ("occupation", ["Tech-support", "Craft-repair", "Other-service",
                       "Sales", "Exec-managerial", "Prof-specialty",
                       "Handlers-cleaners", "Machine-op-inspct",
                       "Adm-clerical", "Farming-fishing", "Transport-moving",
                       "Priv-house-serv", "Protective-serv", "Armed-Forces"]),
    7: ("relationship", ["Wife", "Own-child", "Husband", "Not-in-family",
                         "Other-relative", "Unmarried"]),
    8: ("race", ["White", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other",
                 "Black"]),
    13: ("native-country", ["United-States", "Cambodia", "England",
                            "Puerto-Rico", "Canada", "Germany",
                            "Outlying-US(Guam-USVI-etc)", "India", "Japan",
                            "Greece", "South", "China", "Cuba", "Iran",
                            "Honduras", "Philippines", "Italy", "Poland",
                            "Jamaica", "Vietnam", "Mexico", "Portugal",
                            "Ireland", "France", "Dominican-Republic", "Laos",
                            "Ecuador", "Taiwan", "Haiti", "Columbia",
                            "Hungary", "Guatemala", "Nicaragua", "Scotland",
                            "Thailand", "Yugoslavia", "El-Salvador",
                            "Trinadad&Tobago", "Peru", "Hong",
                            "Holand-Netherlands"]),
}

SEX_COLUMN = 9
EXPECTED_DIM = 102


def encode(fields):
    if any(f == "?" for f in fields):
        return None
    sex = fields[SEX_COLUMN]
    if sex not in ("Male", "Female"):
        raise ValueError(f"unexpected sex value {sex!r}")
    features = []
    for col in sorted(CONTINUOUS):
        features.append(float(fields[col]))
    for col in sorted(CATEGORICAL):
        name, categories = CATEGORICAL[col]
        value = fields[col]
        if value not in categories:
            raise ValueError(f"unknown {name} value {value!r}")
        features.extend(1.0 if value == c else 0.0 for c in categories)
    return 1 if sex == "Female" else 0, features


def read_rows(paths):
    rows = []
    for path in paths:
        with open(path, newline="") as handle:
            for line in handle:
                line = line.strip()
                if not line or line.startswith("|"):
                    continue
                fields = [f.strip().rstrip(".") for f in line.split(",")]
                if len(fields) < 15:
                    continue
                encoded = encode(fields)
                if encoded is not None:
                    rows.append(encoded)
    return rows


def zscore(rows):
    dim = len(rows[0][1])
    n = float(len(rows))
    mean = [0.0] * dim
    second = [0.0] * dim
    for _, x in rows:
        for j, v in enumerate(x):
            mean[j] += v
            second[j] += v * v
    mean = [m / n for m in mean]
    std = [math.sqrt(max(second[j] / n - mean[j] ** 2, 0.0))
           for j in range(dim)]
    for _, x in rows:
        for j in range(dim):
            x[j] = (x[j] - mean[j]) / std[j] if std[j] > 1e-12 else 0.0


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("inputs", nargs="+",
                        help="adult.data and optionally adult.test")
    parser.add_argument("-o", "--out", required=True, help="output CSV path")
    args = parser.parse_args()

    rows = read_rows(args.inputs)
    if not rows:
        sys.exit("no usable rows found")
    dim = len(rows[0][1])
    if dim != EXPECTED_DIM:
        sys.exit(f"encoded dimension {dim}, expected {EXPECTED_DIM}")
    zscore(rows)

    with open(args.out, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["a_1"] + [f"x_{j + 1}" for j in range(dim)])
        for a, x in rows:
            writer.writerow([a] + [repr(v) for v in x])
    print(f"wrote {len(rows)} rows x {dim} features to {args.out}")


if __name__ == "__main__":
    main()
