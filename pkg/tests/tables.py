"""Published benchmark blocks used to pin down the rank aggregation.

Each row: (method, fr, rr, dmr, dur, tbr, str, pp, pr, tsr,
           R_S, R_T, R_P, R_R, R_C) with the printed rank columns as the
expected output of rank_methods, reproducible to within 0.01.
"""

GPT4O_BLOCK = [
    ("Direct", 0.32, 0.00, 67.92, 3.03, 22.01, 77.22, 50.82, 80.51, 92.52, 6.00, 7.67, 7.00, 3.00, 5.92),
    ("CoT", 0.39, 0.01, 69.4, 2.78, 22.13, 76.96, 50.09, 79.92, 91.99, 8.00, 8.00, 10.00, 6.50, 8.12),
    ("Reflextion", 0.67, 0.34, 73.35, 3.84, 21.46, 77.3, 50.52, 80.34, 92.71, 10.00, 8.67, 8.00, 3.50, 7.54),
    ("MAC", 1.40, 0.72, 66.11, 3.67, 24.07, 75.41, 46.38, 81.76, 89.04, 3.00, 7.00, 11.00, 6.00, 6.75),
    ("MAD", 0.68, 0.07, 74.95, 3.68, 20.67, 77.14, 50.52, 79.53, 92.4, 11.00, 9.67, 8.00, 6.50, 8.79),
    ("RAG(M=8)", 2.05, 0.01, 68.37, 2.57, 23.82, 77.19, 58.00, 80.55, 91.58, 7.00, 4.67, 2.00, 5.00, 4.67),
    ("RAG(M=4)", 2.08, 0.02, 67.75, 2.55, 23.71, 77.35, 56.11, 80.53, 91.67, 5.00, 3.67, 4.00, 4.50, 4.29),
    ("RAG(M=1)", 2.43, 0.04, 66.05, 2.47, 22.59, 77.44, 53.38, 80.1, 91.5, 2.00, 4.00, 6.00, 8.50, 5.12),
    ("RAG+Extr.(M=4)", 1.91, 0.02, 66.99, 2.41, 23.5, 77.87, 56.82, 80.31, 91.69, 4.00, 2.00, 3.00, 6.00, 3.75),
    ("RAG+Extr.(M=1)", 2.72, 0.06, 65.76, 2.42, 22.95, 77.79, 53.85, 80.39, 91.64, 1.00, 3.00, 5.00, 6.00, 3.75),
    ("RAG+Abst.", 3.20, 0.02, 69.49, 2.64, 22.23, 76.66, 59.15, 79.36, 90.67, 9.00, 7.67, 1.00, 10.50, 7.04),
]

QWEN_BLOCK = [
    ("Direct", 0.38, 0.03, 71.67, 6.49, 24.82, 78.33, 48.53, 79.68, 92.86, 8.00, 5.00, 8.00, 9.00, 7.50),
    ("CoT", 0.42, 0.04, 70.51, 6.64, 24.66, 78.77, 47.09, 80.12, 93.16, 7.00, 5.33, 10.00, 8.00, 7.58),
    ("Reflextion", 2.39, 1.62, 85.38, 8.08, 25.37, 77.54, 49.15, 79.65, 92.14, 10.00, 7.67, 7.00, 10.00, 8.67),
    ("MAC", 1.10, 2.21, 70.08, 5.74, 23.65, 76.48, 43.3, 81.28, 90.00, 6.00, 7.33, 11.00, 6.50, 7.71),
    ("MAD", 3.30, 1.49, 87.47, 9.46, 26.53, 77.75, 47.49, 80.23, 91.21, 11.00, 7.00, 9.00, 9.00, 9.00),
    ("RAG(M=8)", 3.41, 0.11, 69.39, 6.35, 23.48, 78.4, 55.15, 81.67, 93.29, 5.00, 6.00, 2.00, 3.00, 4.00),
    ("RAG(M=4)", 3.15, 0.11, 68.77, 6.54, 24.06, 79.08, 53.62, 81.26, 93.86, 3.00, 5.00, 4.00, 2.00, 3.50),
    ("RAG(M=1)", 2.58, 0.09, 68.07, 6.89, 25.27, 78.48, 51.62, 81.07, 93.4, 1.00, 5.33, 6.00, 4.50, 4.21),
    ("RAG+Extr.(M=4)", 3.46, 0.16, 69.03, 6.49, 24.33, 79.03, 54.79, 81.21, 93.81, 4.00, 4.33, 3.00, 3.00, 3.58),
    ("RAG+Extr.(M=1)", 3.16, 0.20, 68.29, 6.73, 25.59, 78.33, 52.36, 80.92, 93.42, 2.00, 5.00, 5.00, 4.50, 4.12),
    ("RAG+Abst.", 3.78, 0.17, 72.4, 7.32, 25.11, 78.04, 56.14, 80.5, 93.29, 9.00, 7.33, 1.00, 6.00, 5.83),
]

LLAMA_BLOCK = [
    ("Direct", 0.67, 0.01, 90.55, 7.41, 24.14, 77.07, 46.27, 79.75, 89.32, 8.00, 4.67, 7.00, 7.50, 6.79),
    ("CoT", 0.97, 0.01, 86.45, 7.77, 24.76, 78.10, 45.52, 80.31, 87.97, 7.00, 4.33, 10.00, 6.00, 6.83),
    ("Reflextion", 1.37, 0.22, 94.71, 8.19, 26.40, 76.73, 45.73, 80.28, 89.96, 10.00, 7.00, 9.00, 2.00, 7.00),
    ("MAC", 3.55, 3.73, 97.68, 9.61, 31.46, 75.47, 42.11, 79.98, 88.38, 11.00, 7.67, 11.00, 7.00, 9.17),
    ("MAD", 1.37, 0.16, 91.77, 7.81, 26.42, 76.26, 46.27, 79.05, 90.14, 9.00, 7.00, 7.00, 6.00, 7.25),
    ("RAG(M=8)", 3.95, 0.08, 84.92, 5.99, 20.80, 76.94, 56.00, 79.91, 89.09, 5.00, 5.33, 1.00, 7.00, 4.58),
    ("RAG(M=4)", 2.81, 0.07, 83.67, 6.10, 21.02, 76.77, 53.60, 79.99, 89.68, 4.00, 6.33, 4.00, 3.00, 4.33),
    ("RAG(M=1)", 2.53, 0.06, 85.36, 6.56, 22.68, 77.00, 50.43, 79.79, 89.55, 6.00, 4.67, 6.00, 5.50, 5.54),
    ("RAG+Extr.(M=4)", 3.33, 0.09, 83.60, 6.05, 21.06, 76.70, 54.66, 79.73, 89.30, 3.00, 6.67, 2.00, 8.50, 5.04),
    ("RAG+Extr.(M=1)", 3.18, 0.09, 82.42, 6.62, 22.57, 76.77, 52.23, 79.83, 89.38, 2.00, 6.67, 5.00, 6.00, 4.92),
    ("RAG+Abst.", 3.97, 0.22, 81.96, 6.60, 22.91, 76.86, 54.44, 79.36, 89.42, 1.00, 5.33, 3.00, 7.50, 4.21),
]

DEEPSEEK_BLOCK = [
    ("Direct", 0.55, 0.01, 68.78, 3.07, 22.94, 76.68, 50.27, 80.68, 91.7, 7.00, 4.67, 7.00, 6.50, 6.29),
    ("RAG(M=8)", 2.31, 0.03, 65.31, 3.94, 23.30, 77.21, 53.87, 82.47, 92.66, 1.00, 3.00, 2.00, 2.00, 2.00),
    ("RAG(M=4)", 1.62, 0.03, 66.76, 3.78, 23.37, 76.95, 53.02, 82.00, 92.45, 5.00, 2.67, 4.00, 4.00, 3.92),
    ("RAG(M=1)", 1.23, 0.04, 66.42, 3.73, 22.97, 77.37, 51.82, 81.54, 92.89, 3.00, 3.00, 6.00, 3.50, 3.88),
    ("RAG+Extr.(M=4)", 2.00, 0.03, 66.45, 4.04, 23.28, 76.94, 53.69, 82.00, 92.66, 4.00, 4.33, 3.00, 2.50, 3.46),
    ("RAG+Extr.(M=1)", 1.25, 0.03, 66.19, 3.76, 23.23, 76.94, 51.95, 81.66, 93.02, 2.00, 3.67, 5.00, 2.50, 3.29),
    ("RAG+Abst.", 2.04, 0.02, 67.57, 4.96, 23.16, 76.63, 54.28, 80.5, 92.6, 6.00, 6.33, 1.00, 6.00, 4.83),
]

METHOD_BLOCK = [
    ("Direct", 0.38, 0.03, 71.67, 6.49, 24.82, 78.33, 48.53, 79.68, 92.86, 9.00, 5.67, 9.00, 9.50, 8.29),
    ("CoT", 0.42, 0.04, 70.51, 6.64, 24.66, 78.77, 47.09, 80.12, 93.16, 8.00, 6.33, 11.00, 8.50, 8.46),
    ("Reflextion", 2.39, 1.62, 85.38, 8.08, 25.37, 77.54, 49.15, 79.65, 92.14, 11.00, 8.67, 8.00, 11.00, 9.67),
    ("MAC", 1.10, 2.21, 70.08, 5.74, 23.65, 76.48, 43.3, 81.28, 90.00, 7.00, 8.00, 12.00, 7.50, 8.62),
    ("MAD", 3.30, 1.49, 87.47, 9.46, 26.53, 77.75, 47.49, 80.23, 91.21, 12.00, 8.00, 10.00, 10.00, 10.00),
    ("RAG(M=8)", 3.41, 0.11, 69.39, 6.35, 23.48, 78.40, 55.15, 81.67, 93.29, 6.00, 6.67, 3.00, 3.50, 4.79),
    ("RAG(M=4)", 3.15, 0.11, 68.77, 6.54, 24.06, 79.08, 53.62, 81.26, 93.86, 4.00, 5.67, 5.00, 2.50, 4.29),
    ("RAG(M=1)", 2.58, 0.09, 68.07, 6.89, 25.27, 78.48, 51.62, 81.07, 93.40, 2.00, 6.33, 7.00, 5.00, 5.08),
    ("RAG+Extr.(M=4)", 3.46, 0.16, 69.03, 6.49, 24.33, 79.03, 54.79, 81.21, 93.81, 5.00, 5.00, 4.00, 3.50, 4.38),
    ("RAG+Extr.(M=1)", 3.16, 0.20, 68.29, 6.73, 25.59, 78.33, 52.36, 80.92, 93.42, 3.00, 6.00, 6.00, 5.00, 5.00),
    ("RAG+Abst.", 3.78, 0.17, 72.40, 7.32, 25.11, 78.04, 56.14, 80.50, 93.29, 10.00, 8.33, 2.00, 6.50, 6.71),
    ("EvoRAG", 0.40, 0.06, 44.45, 6.54, 28.22, 81.63, 58.05, 85.82, 92.19, 1.00, 2.33, 1.00, 5.00, 2.33),
]

ALL_BLOCKS = {
    "gpt4o": GPT4O_BLOCK,
    "qwen": QWEN_BLOCK,
    "llama": LLAMA_BLOCK,
    "deepseek": DEEPSEEK_BLOCK,
    "method": METHOD_BLOCK,
}

METRIC_ORDER = ("fr", "rr", "dmr", "dur", "tbr", "str", "pp", "pr", "tsr")


def block_as_table(block):
    return {row[0]: dict(zip(METRIC_ORDER, row[1:10])) for row in block}


def block_expected_ranks(block):
    return {row[0]: row[10:15] for row in block}
