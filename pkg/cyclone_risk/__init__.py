"""热带气旋季节活动与损失的层级贝叶斯模型"""

__version__ = "1.0.0"
