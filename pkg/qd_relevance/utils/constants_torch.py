from __future__ import absolute_import
import torch

# head runs on cpu in float64
# device = torch.device('cuda' if torch.cuda.is_available() else 'cpu')
device = torch.device("cpu")
head_dtype = torch.float64
