"""
黎曼淹没: O'Neill 张量, holonomy 场, Cheeger 形变与曲率恒等式
"""
