#! /usr/bin/python
"""
split a JSONL corpus into a validation part (for tune-weights / calibrate-threshold) and a test part,
randomly, keeping the line order inside each part
"""
import random
import argparse


def split_file_rows(ori_file, w_file, w_other_file, num_lines, seed=None):
    """

    :param ori_file:
    :param w_file: gets num_lines randomly chosen lines
    :param w_other_file: gets the rest
    :param num_lines:
    :param seed:
    :return:
    """
    with open(ori_file) as rf:
        lines = [line for line in rf if line.strip() != ""]
    nrows = len(lines)
    print('there are {} lines in the file {}'.format(nrows, ori_file))

    if nrows <= num_lines:
        num_lines = nrows
        print('gonna put all lines of {} into {}'.format(ori_file, w_file))

    chosen = set(random.Random(seed).sample(range(nrows), num_lines))
    with open(w_file, 'w') as wf, open(w_other_file, 'w') as wlf:
        for lidx, line in enumerate(lines):
            (wf if lidx in chosen else wlf).write(line if line.endswith("\n") else line + "\n")
    print('split_file_rows finished, {}: {}, {}: {}..'.format(w_file, num_lines, w_other_file,
                                                              nrows - num_lines))


def main():
    parser = argparse.ArgumentParser(description='split the lines of a JSONL corpus into two files randomly')
    parser.add_argument('--ori_filepath', type=str, required=True,
                        help='the corpus to split')
    parser.add_argument('--write_filepath', type=str, required=True,
                        help='the validation part')
    parser.add_argument('--write_other_filepath', type=str, required=True,
                        help='the test part')
    parser.add_argument('--num_lines', type=int, required=True,
                        help='lines in the validation part')
    parser.add_argument('--seed', type=int, required=False, default=None)

    args = parser.parse_args()

    split_file_rows(args.ori_filepath, args.write_filepath, args.write_other_filepath, args.num_lines,
                    args.seed)


if __name__ == '__main__':
    main()
